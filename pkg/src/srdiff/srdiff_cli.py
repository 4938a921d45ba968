"""Command line entry point to application."""
import logging
import sys
from pathlib import Path
from typing import Optional

import click
import inject
import structlog
from rich import print as rich_print
from rich.table import Table
from structlog.stdlib import LoggerFactory

from srdiff.cli.run_cli import run
from srdiff.models.frame import FIXED_FRAMES, FRAME_IDS, build_frame
from srdiff.options import (
    DEFAULT_LOCAL_FILE,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_SEED,
    SrdiffConfiguration,
    SrdiffOptions,
)

LOGGER = structlog.get_logger(__name__)

EXTERNAL_LOGGERS = [
    "inject",
    "numpy",
    "scipy",
]


def configure_logging(verbose: bool, quiet: bool = False) -> None:
    """
    Configure logging.

    :param verbose: Enable verbose logging.
    :param quiet: Only log warnings and errors.
    """
    structlog.configure(logger_factory=LoggerFactory())
    level = logging.INFO
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    logging.basicConfig(
        format="[%(asctime)s - %(name)s - %(levelname)s] %(message)s",
        level=level,
        stream=sys.stderr,
    )
    for log_name in EXTERNAL_LOGGERS:
        logging.getLogger(log_name).setLevel(logging.WARNING)


def generate_configuration(
    ctx: click.Context, output_dir: Optional[str], seed: Optional[int], quiet: bool
) -> None:
    """
    Create the configuration to run with and add it to the context.

    :param ctx: Context to add configuration to.
    :param output_dir: Output directory from the command line.
    :param seed: Seed from the command line.
    :param quiet: Suppress human readable summaries.
    """
    ctx.ensure_object(SrdiffOptions)
    ctx.obj.quiet = quiet

    # If there is a local configuration file, use configuration values from it.
    local_file = Path(DEFAULT_LOCAL_FILE)
    if local_file.exists():
        LOGGER.debug("Using local files for configuration", local_file=DEFAULT_LOCAL_FILE)
        local_config = SrdiffConfiguration.from_yaml_file(local_file)
        if local_config.output_dir is not None:
            ctx.obj.output_dir = Path(local_config.output_dir)
        if local_config.seed is not None:
            ctx.obj.seed = local_config.seed

    if output_dir is not None:
        ctx.obj.output_dir = Path(output_dir)
    if seed is not None:
        ctx.obj.seed = seed


@click.group(context_settings=dict(auto_envvar_prefix="SRDIFF", max_content_width=100))
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False),
    help=f"Default directory to write results to [default='{DEFAULT_OUTPUT_DIR}']",
)
@click.option(
    "--seed", type=int, help=f"Default seed of randomized checks [default={DEFAULT_SEED}]"
)
@click.option("--verbose", is_flag=True, default=False, help="Enable verbose logging.")
@click.option("--quiet", is_flag=True, default=False, help="Suppress summaries and info logging.")
@click.pass_context
def cli(
    ctx: click.Context, output_dir: Optional[str], seed: Optional[int], verbose: bool, quiet: bool
) -> None:
    """Sub-riemannian diffeo runs geodesic, matching, steering and Moser experiments."""
    configure_logging(verbose, quiet)
    generate_configuration(ctx, output_dir, seed, quiet)

    def dependencies(binder: inject.Binder) -> None:
        binder.bind(SrdiffOptions, ctx.obj)

    inject.configure(dependencies, clear=True)


@cli.command(context_settings=dict(max_content_width=100))
@click.pass_context
def show_frames(ctx: click.Context) -> None:
    """List the registered frames."""
    table = Table(title="Registered frames")
    table.add_column("Frame")
    table.add_column("Dimension", justify="right")
    table.add_column("Fields", justify="right")
    table.add_column("Domain")
    for frame_id in FRAME_IDS:
        if frame_id in FIXED_FRAMES:
            frame = FIXED_FRAMES[frame_id]()
            dim, count = str(frame.dim), str(frame.count)
        else:
            frame = build_frame(frame_id, 2)
            dim, count = "any", "d"
        domains = ", ".join(domain.value for domain in frame.domains)
        table.add_row(frame_id, dim, count, domains)
    rich_print(table)


@cli.command(context_settings=dict(max_content_width=100))
@click.pass_context
def save_local_config(ctx: click.Context) -> None:
    """
    Save the given configuration options at './.srdiff-local.yml'.

    When this file is present in the directory `srdiff` is run from, the values defined in the
    file will be used unless the command line or the experiment configuration sets them.

    \b
    The supported option are:
    * output_dir
    * seed
    """
    srdiff_config = SrdiffConfiguration(output_dir=str(ctx.obj.output_dir), seed=ctx.obj.seed)
    srdiff_config.save_yaml_file(Path(DEFAULT_LOCAL_FILE))


cli.add_command(run)


if __name__ == "__main__":
    cli(obj=SrdiffOptions(), auto_envvar_prefix="SRDIFF")
