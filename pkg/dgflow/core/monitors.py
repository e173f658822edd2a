"""Integral monitors, point probes and derived flow quantities."""

from dataclasses import dataclass, field as dataclass_field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .field import SolutionField
from .logging_config import get_logger
from .physics import entropy, pressure

logger = get_logger(__name__)

MONITOR_COLUMNS = (
    "time",
    "step",
    "kinetic_energy",
    "entropy",
    "entropy_production",
    "max_residual",
    "min_density",
    "min_pressure",
)


class ProbeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    position: Tuple[float, float, float]


@dataclass
class MonitorRecord:
    """One row of the monitor table.

    Attributes:
        time (float): Simulation time.
        step (int): Step counter.
        kinetic_energy (float): Integral of rho |v|^2 / 2.
        entropy (float): Integral of the mathematical entropy -rho s.
        entropy_production (float): Integral of w . du/dt.
        max_residual (float): Max |du/dt| over all nodes and variables.
        min_density (float): Smallest nodal density.
        min_pressure (float): Smallest nodal pressure.
        probes (Dict[str, Tuple[float, float]]): (rho, p) per probe.
    """

    time: float
    step: int
    kinetic_energy: float
    entropy: float
    entropy_production: float
    max_residual: float
    min_density: float
    min_pressure: float
    probes: Dict[str, Tuple[float, float]] = dataclass_field(default_factory=dict)

    def values(self) -> List[float]:
        row = [getattr(self, name) for name in MONITOR_COLUMNS]
        for rho, p in self.probes.values():
            row.extend([rho, p])
        return row


@dataclass(frozen=True)
class ProbeLocation:
    name: str
    element: int
    node: Tuple[int, int, int]
    distance: float


def locate_probes(probes: Sequence[ProbeConfig], disc) -> List[ProbeLocation]:
    """Nearest solution node of every probe (ties resolved by element id)."""
    located = []
    for probe in probes:
        target = np.asarray(probe.position, dtype=float).reshape(3, 1, 1, 1, 1)
        best: Optional[ProbeLocation] = None
        for key, group in disc.groups.items():
            dist = np.sqrt(np.sum((group.coordinates - target) ** 2, axis=0))
            local, i, j, k = np.unravel_index(int(np.argmin(dist)), dist.shape)
            candidate = ProbeLocation(
                probe.name,
                int(group.elements[local]),
                (int(i), int(j), int(k)),
                float(dist[local, i, j, k]),
            )
            if best is None or (candidate.distance, candidate.element) < (
                best.distance,
                best.element,
            ):
                best = candidate
        located.append(best)
        logger.debug(
            "Located probe",
            probe=probe.name,
            element=best.element,
            node=best.node,
            distance=best.distance,
            operation="locate_probes",
        )
    return located


def compute_monitors(
    field: SolutionField,
    disc,
    step: int,
    dudt: Optional[SolutionField] = None,
    probes: Sequence[ProbeLocation] = (),
) -> MonitorRecord:
    """Evaluate every monitor of ``field``.

    Args:
        field (SolutionField): Admissible state.
        disc (Discretization): Operator at the field's orders.
        step (int): Step counter recorded in the row.
        dudt (Optional[SolutionField]): Residual of ``field``; evaluated when omitted.
        probes (Sequence[ProbeLocation]): Located probes.
    """
    gas = disc.gas
    if dudt is None:
        dudt = disc.residual(field)
    kinetic = disc.element_integrals(
        field, lambda u: 0.5 * np.sum(u[1:4] ** 2, axis=0) / u[0]
    )
    total_entropy = disc.element_integrals(field, lambda u: entropy(u, gas))
    min_rho = np.inf
    min_p = np.inf
    for key in field.groups:
        block = np.moveaxis(field.block(key), 1, 0)
        min_rho = min(min_rho, float(np.min(block[0])))
        min_p = min(min_p, float(np.min(pressure(block, gas.gamma))))
    values = {}
    for probe in probes:
        state = field.element(probe.element)[(slice(None),) + probe.node]
        values[probe.name] = (float(state[0]), float(pressure(state, gas.gamma)))
    return MonitorRecord(
        time=field.time,
        step=step,
        kinetic_energy=float(np.sum(kinetic)),
        entropy=float(np.sum(total_entropy)),
        entropy_production=disc.entropy_production(field, dudt),
        max_residual=float(np.max(np.abs(dudt.data))) if dudt.data.size else 0.0,
        min_density=min_rho,
        min_pressure=min_p,
        probes=values,
    )


def vorticity_and_q(grad: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vorticity (3, ...) and Q-criterion from gradients ``grad[d, q]`` (q = 1..3 velocity)."""
    dv = grad[:, 1:4]  # dv[j, i] = d v_i / d x_j
    omega = np.stack(
        [dv[1, 2] - dv[2, 1], dv[2, 0] - dv[0, 2], dv[0, 1] - dv[1, 0]]
    )
    strain = 0.5 * (dv + np.swapaxes(dv, 0, 1))
    rotation = 0.5 * (dv - np.swapaxes(dv, 0, 1))
    q = 0.5 * (np.sum(rotation**2, axis=(0, 1)) - np.sum(strain**2, axis=(0, 1)))
    return omega, q
