"""Click subcommands and their orchestrators."""
