"""Run command for dgflow.

This module provides the command that executes a simulation described by a
control file: it loads and validates the case, runs the main loop, and
prints a summary of the final monitors.

Exit codes:
- 0: the run reached its final time or iteration limit
- 1: configuration error (invalid control file, bad restart file, ...)
- 2: the solution became inadmissible mid-run (``crash.dgsm`` is written)
"""

from typing import Optional

import typer
from rich.console import Console

from ..core.control_file import load_control_file
from ..core.exceptions import (
    AdmissibilityError,
    DGFlowError,
    NumericalValidityError,
    StageError,
)
from ..core.logging_config import ErrorCodes, get_logger
from ..core.printer import Printer
from ..core.solver import CRASH_FILE
from ..core.solver import run as run_simulation

app = typer.Typer(
    name="run",
    help="Run the simulation described by a control file.",
    no_args_is_help=True,
    rich_markup_mode="rich",
    # Options may follow the positional control file.
    context_settings={"allow_interspersed_args": True},
)

console = Console()
logger = get_logger(__name__)


@app.callback(invoke_without_command=True)
def run(
    ctx: typer.Context,
    case: str = typer.Argument(..., help="Control file of the case (e.g., tgv.control)"),
    threads: Optional[int] = typer.Option(
        None,
        "--threads",
        "-j",
        min=1,
        help="Worker threads (default: DGFLOW_THREADS or 1)",
    ),
    output_dir: Optional[str] = typer.Option(
        None,
        "--output-dir",
        "-o",
        help="Directory for snapshots, monitors and restart files (overrides the control file)",
    ),
    restart: Optional[str] = typer.Option(
        None,
        "--restart",
        "-r",
        help="Resume from a .dgsm restart file",
    ),
):
    """Run a simulation.

    Args:
        ctx (typer.Context): The Typer context object containing CLI state.
        case (str): Path to the control file.
        threads (Optional[int]): Worker thread count.
        output_dir (Optional[str]): Output directory override.
        restart (Optional[str]): Restart file to resume from.

    Raises:
        typer.Exit: Code 1 on configuration errors, 2 on an inadmissible state.
    """
    if ctx.invoked_subcommand is not None:
        return

    config = load_control_file(case)
    if config is None:
        raise typer.Exit(code=1)

    try:
        report = run_simulation(config, threads, output_dir, restart)
    except (AdmissibilityError, StageError, NumericalValidityError) as e:
        console.print(f"[red]Error: {e} :boom:[/red]")
        console.print(
            f"[yellow]Last state written to {CRASH_FILE} in the output directory[/yellow]"
        )
        raise typer.Exit(code=2)
    except (DGFlowError, OSError) as e:
        logger.error(
            "Run aborted",
            case=case,
            error=str(e),
            error_code=getattr(e, "error_code", ErrorCodes.FILE_IO_ERROR),
            operation="run_command",
        )
        console.print(f"[red]Error: {e} :no_entry_sign:[/red]")
        raise typer.Exit(code=1)

    Printer.from_report(report).print()
    console.print("[bold green]:sparkles: Run finished successfully![/bold green]")
