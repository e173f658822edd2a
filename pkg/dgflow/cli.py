"""Command-line interface for dgflow.

This module provides the main entry point for the dgflow CLI, which runs
compressible-flow simulations described by ``*.control`` files. It includes
commands for running a case and for checking a control file, plus a
``--init`` wizard that writes a starter case.

The CLI is built using Typer and provides rich text output formatting.
"""

import dataclasses
import os
import zoneinfo
from importlib.metadata import PackageNotFoundError, version

import typer
from rich.console import Console

from .commands import check, run
from .core.init import ControlFileInitializer
from .core.logging_config import LoggingConfig, get_logger, setup_logging

app = typer.Typer(
    name="dgflow",
    help="High-order discontinuous Galerkin solver for the compressible Euler and Navier-Stokes equations.",
    no_args_is_help=True,
    rich_markup_mode="rich",
    context_settings={"help_option_names": ["-h", "--help"]},
    add_completion=True,
)

console = Console()

AVAILABLE_TIMEZONES = sorted(zoneinfo.available_timezones())

logger = get_logger(__name__)

app.add_typer(run.app, name="run")
app.add_typer(check.app, name="check")


def _version_callback(value: bool):
    """Handle the --version flag.

    Raises:
        typer.Exit: Always exits after displaying version information.
    """
    if value:
        try:
            current_version = version("dgflow")
            logger.info(
                "Version information requested",
                version=current_version,
                operation="version_check",
            )
            console.print(f"[cyan bold]dgflow v{current_version}[/cyan bold]")
        except PackageNotFoundError:
            logger.error("Version information not available", operation="version_check")
            console.print("[red]Version info not available[/red]")
        raise typer.Exit()


def timezone_callback(value: str) -> str:
    """Validate the timezone value.

    Raises:
        typer.BadParameter: If the timezone is invalid.
    """
    if not value:
        return os.environ.get("LOG_TIMEZONE", "UTC")
    try:
        zoneinfo.ZoneInfo(value)
        return value
    except (zoneinfo.ZoneInfoNotFoundError, ValueError):
        suggestions = [tz for tz in AVAILABLE_TIMEZONES if value.lower() in tz.lower()][:3]
        suggestion_msg = (
            f"\nDid you mean one of these?\n  {', '.join(suggestions)}"
            if suggestions
            else ""
        )
        raise typer.BadParameter(
            f"Invalid timezone: {value}. Must be a valid IANA timezone name.{suggestion_msg}"
        )


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    tz: str = typer.Option(
        None,
        "--timezone",
        "-t",
        help="Timezone for log timestamps (e.g., 'Europe/Madrid'). Defaults to LOG_TIMEZONE or UTC.",
        callback=timezone_callback,
        autocompletion=lambda: AVAILABLE_TIMEZONES,
    ),
    version: bool = typer.Option(
        None,
        "--version",
        help="Show the dgflow version and exit.",
        callback=_version_callback,
        is_eager=True,
    ),
    init: bool = typer.Option(
        False,
        "--init",
        help="Write a starter Taylor-Green control file interactively.",
    ),
    config: str = typer.Option(
        None,
        "--config",
        "-c",
        help="Path of the control file written by --init (default: case.control).",
    ),
    dry_run: bool = typer.Option(
        False,
        "--dry-run",
        help="Preview the --init control file without writing to disk.",
    ),
    verbose: int = typer.Option(
        0,
        "--verbose",
        "-v",
        count=True,
        help="Enable verbose output. Use -v for INFO, -vv for DEBUG.",
    ),
):
    """dgflow - high-order compressible flow simulations from control files.

    Args:
        ctx (typer.Context): The Typer context object for managing CLI state.
        tz (str): Timezone for log timestamps.
        version (bool): Flag to show version information.
        init (bool): Write a starter control file and exit.
        config (str): Output path for --init.
        dry_run (bool): Preview mode for --init.
        verbose (int): Verbosity level (0=no console, 1=INFO, 2=DEBUG).
    """
    console_level = None
    if verbose == 1:
        console_level = "INFO"
    elif verbose >= 2:
        console_level = "DEBUG"

    ctx.ensure_object(dict)
    base = LoggingConfig.from_env()
    logging_config = dataclasses.replace(
        base, console_level=console_level or base.console_level, timezone=tz
    )
    ctx.obj["logging_config"] = logging_config
    setup_logging(logging_config)

    if init:
        config_path = config or "case.control"
        logger.info(
            "Starting configuration initialization",
            config_path=config_path,
            dry_run=dry_run,
            operation="init_config",
        )
        if not ControlFileInitializer().run(config_path, dry_run=dry_run):
            logger.error(
                "Configuration initialization failed",
                config_path=config_path,
                operation="init_config",
            )
            raise typer.Exit(code=1)
        raise typer.Exit()

    if ctx.invoked_subcommand is None:
        console.print(ctx.get_help())
        raise typer.Exit()

    logger.info(
        "CLI context initialized",
        command=ctx.invoked_subcommand,
        verbose_level=verbose,
        timezone=tz,
        operation="cli_init",
    )


if __name__ == "__main__":
    app()
