"""Value types and configuration schemas."""
