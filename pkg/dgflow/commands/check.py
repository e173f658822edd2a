"""Check command for dgflow.

Parses and validates a control file without running anything and prints
the resolved configuration, so typos surface before a long run starts.
"""

import typer
from rich.console import Console

from ..core.control_file import load_control_file
from ..core.printer import Printer

app = typer.Typer(
    name="check",
    help="Validate a control file and print the resolved configuration.",
    no_args_is_help=True,
    rich_markup_mode="rich",
    # Options may follow the positional control file.
    context_settings={"allow_interspersed_args": True},
)

console = Console()


@app.callback(invoke_without_command=True)
def check(
    ctx: typer.Context,
    case: str = typer.Argument(..., help="Control file to validate (e.g., tgv.control)"),
):
    """Validate a control file.

    Raises:
        typer.Exit: Exits with code 1 when the file is missing or invalid.
    """
    if ctx.invoked_subcommand is not None:
        return

    config = load_control_file(case)
    if config is None:
        raise typer.Exit(code=1)
    Printer.from_config(config).print()
    console.print("[green]Control file is valid! :white_check_mark:[/green]")
