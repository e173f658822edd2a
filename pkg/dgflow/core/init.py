"""Starter control file for ``dgflow --init``.

The wizard asks for the few values that change between desk-scale runs and
writes a commented Taylor-Green case with an entropy-conserving split form.
"""

import math
from typing import Callable, Dict

from pydantic import ValidationError
from rich.console import Console
from rich.live import Live
from rich.prompt import Prompt
from rich.table import Table

from .config import NumericsConfig, RunConfig, TimeConfig
from .control_file import parse_int, parse_real, save_control_file
from .initial_conditions import InitialConditionConfig, InitialConditionKind
from .logging_config import get_logger
from .mesh import MeshSpec
from .physics import RiemannSolver, TwoPointFlux

logger = get_logger(__name__)
console = Console()

PROMPTS: Dict[str, tuple[str, str, Callable[[str], object]]] = {
    "elements": ("Elements per direction", "4", parse_int),
    "order": ("Polynomial order", "3", parse_int),
    "final_time": ("Final time", "1.0", parse_real),
    "mach": ("Mach number", "0.1", parse_real),
}


def template_config(elements: int = 4, order: int = 3, final_time: float = 1.0, mach: float = 0.1) -> RunConfig:
    """Inviscid Taylor-Green vortex on [0, 2 pi]^3 with the entropy-conserving split form."""
    two_pi = 2.0 * math.pi
    return RunConfig(
        mesh=MeshSpec(elements=(elements,) * 3, upper=(two_pi,) * 3),
        numerics=NumericsConfig(
            orders=(order,) * 3,
            riemann=RiemannSolver.LAX_FRIEDRICHS,
            volume_flux=TwoPointFlux.ENTROPY_CONSERVING,
        ),
        time=TimeConfig(cfl=0.5, final_time=final_time),
        initial_condition=InitialConditionConfig(
            name=InitialConditionKind.TAYLOR_GREEN, mach=mach
        ),
    )


class ControlFileInitializer:
    def _prompt_for_values(self) -> Dict[str, object]:
        """Prompt the user for the template parameters interactively."""
        values: Dict[str, object] = {}
        table = Table(title="Taylor-Green template")
        table.add_column("Parameter", style="cyan")
        table.add_column("Value", style="green")

        with Live(table, refresh_per_second=4) as live:
            for name, (label, default, convert) in PROMPTS.items():
                while True:
                    answer = Prompt.ask(f"{label}", default=default)
                    try:
                        values[name] = convert(answer)
                        break
                    except ValueError as e:
                        console.print(f"[red]{e}[/red]")
                table.add_row(label, answer)
                live.update(table)
        return values

    def run(self, output_path: str = "case.control", dry_run: bool = False) -> bool:
        """Run the template wizard and save (or preview) the control file."""
        logger.info("Starting control file wizard", output_path=output_path, operation="init_config")
        console.print("[bold cyan]Starting control file wizard...[/bold cyan]")
        try:
            values = self._prompt_for_values()
            try:
                config = template_config(**values)
            except ValidationError as e:
                console.print(f"[red]Error: Invalid configuration: {e}[/red]")
                logger.error("Invalid template configuration", error=str(e), operation="init_config")
                return False
            return save_control_file(config, output_path, dry_run=dry_run)
        except KeyboardInterrupt:
            console.print("\n[yellow]Configuration interrupted by user[/yellow]")
            logger.info("Configuration interrupted by user", operation="init_config")
            return False
