"""Output formatting module for dgflow.

This module prints run summaries and resolved configurations using rich
tables. Setting ``DGFLOW_PLAIN_OUTPUT=1`` switches to plain text, which is
what batch jobs and log scrapers usually want.
"""

import os
from typing import List, Tuple

from rich import box
from rich.align import Align
from rich.console import Console
from rich.table import Table

from .config import RunConfig
from .logging_config import get_logger
from .solver import RunReport

logger = get_logger(__name__)
console = Console()

PLAIN_OUTPUT_ENV = "DGFLOW_PLAIN_OUTPUT"


def _plain() -> bool:
    return os.environ.get(PLAIN_OUTPUT_ENV) == "1"


def _number(value: float) -> str:
    return f"{value:.6e}"


class Printer:
    """Formats reports for the terminal.

    Attributes:
        title (str): Table title.
        rows (List[Tuple[str, str]]): (metric, value) pairs.
    """

    def __init__(self, title: str, rows: List[Tuple[str, str]]):
        self.title = title
        self.rows = rows

    @classmethod
    def from_report(cls, report: RunReport) -> "Printer":
        final = report.final
        rows = [
            ("Steps", str(report.steps)),
            ("Step counter", str(report.step)),
            ("Simulated time", _number(report.time)),
            ("Wall time [s]", f"{report.wall_time:.2f}"),
            ("Degrees of freedom", str(report.dofs)),
            ("Adaptations", str(report.adaptations)),
            ("Snapshots", str(len(report.snapshots))),
            ("Kinetic energy", _number(final.kinetic_energy)),
            ("Entropy", _number(final.entropy)),
            ("Entropy production", _number(final.entropy_production)),
            ("Max residual", _number(final.max_residual)),
            ("Min density", _number(final.min_density)),
            ("Min pressure", _number(final.min_pressure)),
        ]
        for name, (rho, p) in final.probes.items():
            rows.append((f"Probe {name} (rho, p)", f"{_number(rho)}, {_number(p)}"))
        rows.append(("Output directory", str(report.output_dir)))
        return cls("Run Summary", rows)

    @classmethod
    def from_config(cls, config: RunConfig) -> "Printer":
        numerics = config.numerics
        time = config.time
        rows = [
            ("Elements", " x ".join(str(n) for n in config.mesh.elements)),
            (
                "Bounds",
                " x ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(config.mesh.lower, config.mesh.upper)),
            ),
            (
                "Periodic",
                ", ".join(a for a, p in zip("xyz", config.mesh.periodic) if p) or "none",
            ),
            ("Curved", "yes" if config.mesh.curvature is not None else "no"),
            ("Polynomial order", ", ".join(str(p) for p in numerics.orders)),
            ("Nodes", numerics.nodes.value),
            ("Riemann solver", numerics.riemann.value),
            ("Volume flux", numerics.volume_flux.value if numerics.volume_flux else "standard"),
            ("Gamma", f"{config.gas.gamma:g}"),
            ("Gas constant", f"{config.gas.gas_constant:g}"),
            ("Viscosity", f"{config.gas.mu:g}"),
            ("Time scheme", time.method.value),
            ("Step", f"dt = {time.dt:g}" if time.dt is not None else f"cfl = {time.effective_cfl:g}"),
            ("Final time", f"{time.final_time:g}" if time.final_time is not None else "-"),
            ("Max iterations", str(time.max_iterations) if time.max_iterations is not None else "-"),
            (
                "Adaptation",
                config.adaptation.mode.value if config.adaptation.mode else "none",
            ),
            (
                "Shock capturing",
                (
                    f"svv ({config.shock_capturing.kernel.kind.value}, mu_a = {config.shock_capturing.mu_a:g})"
                    if config.shock_capturing
                    else "none"
                ),
            ),
            ("Initial condition", config.initial_condition.name.value),
            ("Boundaries", ", ".join(f"{n} ({b.kind.value})" for n, b in config.boundaries.items()) or "-"),
            ("Probes", ", ".join(p.name for p in config.probes) or "-"),
            ("Output directory", config.output.directory),
        ]
        return cls("Resolved Configuration", rows)

    def print(self) -> None:
        """Print the rows as a table, or as ``metric : value`` lines in plain mode."""
        logger.info("Printing report", title=self.title, rows=len(self.rows), operation="print_report")
        if _plain():
            print(self.title)
            for metric, value in self.rows:
                print(f"{metric} : {value}")
            return
        table = Table(
            title=self.title,
            box=box.MINIMAL_DOUBLE_HEAD,
            title_justify="center",
            title_style="bold bright_cyan",
            show_header=True,
            header_style="bold magenta",
            pad_edge=False,
            row_styles=("none", "yellow"),
            expand=True,
        )
        table.add_column("Metric", justify="center", style="cyan", no_wrap=True, ratio=2)
        table.add_column("Value", justify="center", style="green", overflow="fold")
        for metric, value in self.rows:
            table.add_row(Align.left(metric), Align.center(value))
        console.print(Align.center(table))
