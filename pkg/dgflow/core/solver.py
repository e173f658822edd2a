"""Main simulation loop.

``run`` builds the mesh and operator described by a ``RunConfig``, samples
(or restores) the initial state, and repeats

    step size -> Runge-Kutta step -> admissibility check -> monitors
    -> adaptation -> snapshot

until the final time or the iteration limit is reached. The driver itself
is single-threaded; worker threads live inside the spatial operator.
"""

import os
import time as wallclock
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .adaptation import AdaptationMode, adapt
from .basis import MAX_ORDER
from .config import RunConfig, SnapshotFormat
from .exceptions import AdmissibilityError, NumericalValidityError, ParameterError, StageError
from .field import OrderMap
from .initial_conditions import initial_condition
from .logging_config import ErrorCodes, get_logger
from .mesh import build_box_mesh
from .monitors import MonitorRecord, ProbeLocation, compute_monitors, locate_probes
from .output import read_restart, write_monitors, write_restart, write_snapshot
from .spatial import Discretization
from .time_integration import compute_dt_cfl, rk_step

logger = get_logger(__name__)

THREADS_ENV = "DGFLOW_THREADS"
CRASH_FILE = "crash.dgsm"
RESTART_FILE = "restart.dgsm"
# Relative slack on the final time so round-off does not add a sliver step.
TIME_SLACK = 1e-12
# Tau mode with interval 0 adapts once the residual is this close to the threshold.
SETTLED_FACTOR = 10.0


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit value, else ``DGFLOW_THREADS``, else 1.

    Raises:
        ParameterError: If the count is not a positive integer.
    """
    if threads is None:
        raw = os.environ.get(THREADS_ENV)
        if raw is None or not raw.strip():
            return 1
        try:
            threads = int(raw)
        except ValueError as e:
            raise ParameterError(f"{THREADS_ENV} must be an integer, got '{raw}'") from e
    if threads < 1:
        raise ParameterError(f"Thread count must be >= 1, got {threads}", threads=threads)
    return threads


@dataclass
class RunReport:
    """Summary of a finished run.

    Attributes:
        steps (int): Steps taken in this invocation.
        step (int): Final value of the global step counter.
        time (float): Final simulation time.
        wall_time (float): Elapsed wall-clock seconds.
        final (MonitorRecord): Monitors of the final state.
        output_dir (Path): Directory all files went to.
        snapshots (List[Path]): Snapshot files written.
        adaptations (int): Order changes applied.
        dofs (int): Final number of nodal values.
    """

    steps: int
    step: int
    time: float
    wall_time: float
    final: MonitorRecord
    output_dir: Path
    snapshots: List[Path] = field(default_factory=list)
    adaptations: int = 0
    dofs: int = 0


def build_discretization(config: RunConfig, threads: int = 1, orders: Optional[OrderMap] = None) -> Discretization:
    """Mesh plus operator for ``config``, at uniform initial orders unless ``orders`` is given."""
    mesh = build_box_mesh(config.mesh)
    if orders is None:
        orders = OrderMap.uniform(mesh.n_elements, config.numerics.orders, *order_bounds(config))
    return Discretization(
        mesh,
        orders,
        config.gas,
        kind=config.numerics.nodes,
        riemann=config.numerics.riemann,
        volume_flux=config.numerics.volume_flux,
        boundaries=config.boundaries,
        shock_capturing=config.shock_capturing,
        threads=threads,
    )


def order_bounds(config: RunConfig):
    if config.adaptation.mode is None:
        return 1, MAX_ORDER
    return config.adaptation.p_min, config.adaptation.p_max


class _Run:
    """State of one invocation of the main loop."""

    def __init__(self, config: RunConfig, threads: int, output_dir: Path, restart: Optional[Path]):
        self.config = config
        self.output_dir = output_dir
        self.gamma = config.gas.gamma
        self.records: List[MonitorRecord] = []
        self.snapshots: List[Path] = []
        self.adaptations = 0
        self.settled = False

        if restart is not None:
            self.field, self.step, self.settled = read_restart(restart, *order_bounds(config))
            if len(self.field.orders) != config.mesh.n_elements:
                raise ParameterError(
                    f"Restart file has {len(self.field.orders)} elements, mesh has {config.mesh.n_elements}"
                )
            self.disc = build_discretization(config, threads, self.field.orders)
        else:
            self.disc = build_discretization(config, threads)
            self.field = initial_condition(config.initial_condition, self.disc)
            self.step = 0
        self.field.check_admissible(self.gamma)
        self.probes: List[ProbeLocation] = locate_probes(config.probes, self.disc)
        self.register = np.zeros_like(self.field.data)
        self.start_step = self.step

    # -- loop pieces --------------------------------------------------------

    def finished(self) -> bool:
        limits = self.config.time
        if limits.max_iterations is not None and self.step >= limits.max_iterations:
            return True
        if limits.final_time is not None:
            return self.field.time >= limits.final_time * (1.0 - TIME_SLACK)
        return False

    def step_size(self) -> float:
        limits = self.config.time
        if limits.dt is not None:
            dt = limits.dt
        else:
            dt = compute_dt_cfl(self.field, self.disc, limits.effective_cfl, limits.dfl)
        if limits.final_time is not None:
            dt = min(dt, limits.final_time - self.field.time)
        return dt

    def record(self) -> MonitorRecord:
        record = compute_monitors(self.field, self.disc, self.step, probes=self.probes)
        self.records.append(record)
        logger.debug(
            "Monitors",
            step=self.step,
            time=record.time,
            kinetic_energy=record.kinetic_energy,
            max_residual=record.max_residual,
            operation="run",
        )
        return record

    def snapshot(self) -> None:
        output = self.config.output
        suffix = "vtk" if output.format is SnapshotFormat.VTK else "dat"
        path = self.output_dir / f"snapshot_{self.step:06d}.{suffix}"
        write_snapshot(
            self.field,
            self.disc,
            path,
            output.format,
            output.visualization_order,
            output.vorticity,
        )
        self.snapshots.append(path)

    def adapt_due(self, record: Optional[MonitorRecord]) -> bool:
        settings = self.config.adaptation
        if settings.mode is None:
            return False
        if settings.interval > 0:
            return self.step % settings.interval == 0
        if settings.mode is AdaptationMode.FEATURE or self.settled or record is None:
            return False
        return record.max_residual < SETTLED_FACTOR * settings.threshold

    def adapt(self) -> None:
        settings = self.config.adaptation
        result = adapt(self.field, self.disc, settings.mode, settings)
        self.settled = True
        if result.field is self.field:
            return
        self.field = result.field
        self.disc = result.discretization
        self.field.check_admissible(self.gamma)
        self.probes = locate_probes(self.config.probes, self.disc)
        self.register = np.zeros_like(self.field.data)
        self.adaptations += 1

    def advance(self) -> None:
        dt = self.step_size()
        rk_step(
            self.field,
            dt,
            self.config.time.method,
            self.disc.residual,
            self.register,
        )
        self.step += 1
        self.field.check_admissible(self.gamma)
        logger.debug("Step", step=self.step, time=self.field.time, dt=dt, operation="run")

    def dump(self, name: str) -> Path:
        return write_restart(self.field, self.step, self.output_dir / name, settled=self.settled)

    def write_monitor_table(self) -> None:
        write_monitors(
            self.records,
            self.output_dir / self.config.output.monitors_file,
            [p.name for p in self.config.probes],
        )


def run(
    config: RunConfig,
    threads: Optional[int] = None,
    output_dir: Optional[Path] = None,
    restart: Optional[Path] = None,
) -> RunReport:
    """Run a simulation to completion.

    Args:
        config (RunConfig): Validated configuration.
        threads (Optional[int]): Worker threads; ``DGFLOW_THREADS`` or 1 when omitted.
        output_dir (Optional[Path]): Overrides ``config.output.directory``.
        restart (Optional[Path]): DGSM file to resume from.

    Returns:
        RunReport: Steps, times and final monitors.

    Raises:
        AdmissibilityError: Non-positive density or pressure mid-run. The
            partially advanced state is dumped to ``crash.dgsm`` first.
        StageError: Residual failure inside a Runge-Kutta stage (dumped likewise).
        ConfigurationError: Operator construction rejected the configuration.
        RestartFormatError: Unreadable restart file.
    """
    started = wallclock.perf_counter()
    threads = resolve_threads(threads)
    output_dir = Path(output_dir if output_dir is not None else config.output.directory)
    output_dir.mkdir(parents=True, exist_ok=True)
    logger.info(
        "Starting run",
        elements=config.mesh.n_elements,
        orders=config.numerics.orders,
        threads=threads,
        output_dir=str(output_dir),
        restart=str(restart) if restart else None,
        operation="run",
    )

    state = _Run(config, threads, output_dir, Path(restart) if restart else None)
    output = config.output
    state.record()
    state.snapshot()
    if (
        config.adaptation.mode is AdaptationMode.FEATURE
        and config.adaptation.interval == 0
        and restart is None
    ):
        state.adapt()

    try:
        while not state.finished():
            state.advance()
            last = state.finished()
            record = None
            if last or state.step % output.monitor_interval == 0:
                record = state.record()
            if not last and state.adapt_due(record):
                state.adapt()
            if last or (output.interval > 0 and state.step % output.interval == 0):
                state.snapshot()
    except (AdmissibilityError, StageError, NumericalValidityError) as e:
        crash = state.dump(CRASH_FILE)
        state.write_monitor_table()
        details = getattr(e.__cause__, "details", None) or e.details
        logger.error(
            "Run stopped on an inadmissible state",
            step=state.step,
            time=state.field.time,
            element=details.get("element"),
            node=details.get("node"),
            crash_file=str(crash),
            error=str(e),
            error_code=ErrorCodes.INADMISSIBLE_STATE,
            operation="run",
        )
        raise

    if state.records[-1].step != state.step or state.records[-1].time != state.field.time:
        state.record()
    state.write_monitor_table()
    state.dump(RESTART_FILE)
    report = RunReport(
        steps=state.step - state.start_step,
        step=state.step,
        time=state.field.time,
        wall_time=wallclock.perf_counter() - started,
        final=state.records[-1],
        output_dir=output_dir,
        snapshots=state.snapshots,
        adaptations=state.adaptations,
        dofs=int(state.field.data.size),
    )
    logger.info(
        "Run finished",
        steps=report.steps,
        time=report.time,
        wall_time=report.wall_time,
        adaptations=report.adaptations,
        error_code=ErrorCodes.SUCCESS,
        operation="run",
    )
    return report
