"""Validated run configuration.

A ``RunConfig`` is the fully resolved content of one control file. Every
nested model validates its own ranges; cross-section rules (split forms
need Gauss-Lobatto nodes, orders inside the adaptation bounds, every
non-periodic box face bound to a boundary condition) are checked by
``RunConfig`` itself.
"""

import enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .adaptation import AdaptationConfig
from .basis import MAX_ORDER, NodeKind
from .boundary import BoundaryCondition, BoundaryKind
from .initial_conditions import InitialConditionConfig
from .mesh import BOX_FACES, MeshSpec
from .monitors import ProbeConfig
from .physics import GasProperties, RiemannSolver, TwoPointFlux
from .shock_capturing import ArtificialFluxConfig
from .time_integration import RKScheme

DEFAULT_CFL = 0.5


class SnapshotFormat(str, enum.Enum):
    POINTS = "points"
    VTK = "vtk"


class NumericsConfig(BaseModel):
    """Spatial discretization choices.

    Attributes:
        nodes (NodeKind): Quadrature node family.
        orders (Tuple[int, int, int]): Initial (Px, Py, Pz) of every element.
        riemann (RiemannSolver): Interface flux.
        volume_flux (Optional[TwoPointFlux]): Split-form two-point flux; None
            selects the standard weak form.
    """

    model_config = ConfigDict(frozen=True)

    nodes: NodeKind = NodeKind.GAUSS_LOBATTO
    orders: Tuple[int, int, int] = (3, 3, 3)
    riemann: RiemannSolver = RiemannSolver.LAX_FRIEDRICHS
    volume_flux: Optional[TwoPointFlux] = None

    @field_validator("orders")
    @classmethod
    def _orders_in_range(cls, v: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if min(v) < 1 or max(v) > MAX_ORDER:
            raise ValueError(f"polynomial order {v} outside [1, {MAX_ORDER}]")
        return v

    @model_validator(mode="after")
    def _split_form_nodes(self) -> "NumericsConfig":
        if self.volume_flux is not None and self.nodes is NodeKind.GAUSS:
            raise ValueError("split forms require Gauss-Lobatto nodes")
        return self


class TimeConfig(BaseModel):
    """Explicit time marching and stopping criteria.

    Exactly one of ``cfl`` and ``dt`` sets the step; with neither, the CFL
    number defaults to 0.5. At least one stopping criterion is required.
    """

    model_config = ConfigDict(frozen=True)

    method: RKScheme = RKScheme.RK3
    cfl: Optional[float] = Field(None, gt=0.0)
    dfl: float = Field(0.0, ge=0.0)
    dt: Optional[float] = Field(None, gt=0.0)
    final_time: Optional[float] = Field(None, ge=0.0)
    max_iterations: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def _step_and_stop(self) -> "TimeConfig":
        if self.cfl is not None and self.dt is not None:
            raise ValueError("set either 'cfl' or 'dt', not both")
        if self.final_time is None and self.max_iterations is None:
            raise ValueError("one of 'final time' or 'max iterations' is required")
        return self

    @property
    def effective_cfl(self) -> float:
        return DEFAULT_CFL if self.cfl is None else self.cfl


class OutputConfig(BaseModel):
    """Where and how often results are written.

    Attributes:
        directory (str): Output directory, relative to the working directory.
        interval (int): Steps between snapshots; 0 writes only the first and last.
        format (SnapshotFormat): Snapshot file format.
        visualization_order (Optional[int]): Equispaced resampling order; the
            element's largest order when omitted.
        vorticity (bool): Add vorticity and Q-criterion columns.
        monitor_interval (int): Steps between monitor rows.
        monitors_file (str): Monitor table file name.
    """

    model_config = ConfigDict(frozen=True)

    directory: str = "output"
    interval: int = Field(0, ge=0)
    format: SnapshotFormat = SnapshotFormat.POINTS
    visualization_order: Optional[int] = Field(None, ge=1, le=MAX_ORDER)
    vorticity: bool = False
    monitor_interval: int = Field(1, ge=1)
    monitors_file: str = "monitors.csv"


class RunConfig(BaseModel):
    """Complete description of one simulation."""

    model_config = ConfigDict(frozen=True)

    mesh: MeshSpec
    gas: GasProperties = GasProperties()
    numerics: NumericsConfig = NumericsConfig()
    time: TimeConfig
    adaptation: AdaptationConfig = AdaptationConfig()
    shock_capturing: Optional[ArtificialFluxConfig] = None
    output: OutputConfig = OutputConfig()
    initial_condition: InitialConditionConfig = InitialConditionConfig()
    boundaries: Dict[str, BoundaryCondition] = {}
    probes: List[ProbeConfig] = []

    @model_validator(mode="after")
    def _cross_checks(self) -> "RunConfig":
        if self.shock_capturing is not None and self.numerics.nodes is NodeKind.GAUSS:
            raise ValueError("SVV shock capturing requires Gauss-Lobatto nodes")
        if self.adaptation.mode is not None:
            low, high = self.adaptation.p_min, self.adaptation.p_max
            if min(self.numerics.orders) < low or max(self.numerics.orders) > high:
                raise ValueError(
                    f"polynomial order {self.numerics.orders} outside adaptation bounds [{low}, {high}]"
                )
        for name, bc in self.boundaries.items():
            if name != bc.tag:
                raise ValueError(f"boundary '{name}' is registered under tag '{bc.tag}'")
        for axis, periodic in enumerate(self.mesh.periodic):
            for face in BOX_FACES[2 * axis : 2 * axis + 2]:
                tag = self.mesh.boundary_tags.get(face)
                if periodic and tag is not None:
                    raise ValueError(f"box face {face} is periodic but bound to '{tag}'")
                if not periodic:
                    if tag is None:
                        raise ValueError(f"box face {face} is neither periodic nor bound to a boundary")
                    if tag not in self.boundaries:
                        raise ValueError(f"missing boundary tag '{tag}'")
                    if self.boundaries[tag].kind is BoundaryKind.PERIODIC:
                        raise ValueError(f"boundary '{tag}' is periodic but box face {face} is not")
        names = [p.name for p in self.probes]
        if len(names) != len(set(names)):
            raise ValueError("probe names must be unique")
        return self
