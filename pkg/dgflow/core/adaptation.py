"""Anisotropic p-adaptation.

Orders are chosen per element either from the density-gradient sensor
(feature mode) or from truncation-error estimates on coarser candidate
orders (tau mode). Solutions move between order maps with per-axis
interpolation when an order increases and an exact L2 projection when it
decreases, followed by a per-element shift that keeps J-weighted integrals.
"""

import enum
import functools
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg

from .basis import MAX_ORDER, NodeKind, along_axis, build_basis, interpolation_matrix
from .exceptions import ConfigurationError, InvalidOrderError
from .field import OrderMap, OrderTriple, SolutionField
from .logging_config import ErrorCodes, get_logger
from .shock_capturing import shock_sensor
from .spatial import Discretization

logger = get_logger(__name__)

__all__ = [
    "AdaptationConfig",
    "AdaptationMode",
    "AdaptationResult",
    "OrderMap",
    "TauEstimate",
    "adapt",
    "candidate_orders",
    "feature_orders",
    "feature_sensor",
    "project_solution",
    "select_orders",
    "tau_estimate",
]

# Slack on the fitted crossing so exact integers are not rounded up.
CROSSING_SLACK = 1e-9


class AdaptationMode(str, enum.Enum):
    FEATURE = "feature"
    TAU = "tau"


class AdaptationConfig(BaseModel):
    """Order-adaptation settings.

    Attributes:
        mode (Optional[AdaptationMode]): None disables adaptation.
        interval (int): Steps between adaptations; 0 adapts once, when the
            residual falls below ten times the threshold (tau mode only).
        threshold (float): Truncation-error threshold.
        p_min (int): Lowest order.
        p_max (int): Highest order.
        sensor_low (float): Feature sensor mapped to ``p_min``.
        sensor_high (float): Feature sensor mapped to ``p_max``.
    """

    model_config = ConfigDict(frozen=True)

    mode: Optional[AdaptationMode] = None
    interval: int = Field(0, ge=0)
    threshold: float = Field(1e-4, gt=0.0)
    p_min: int = Field(1, ge=1, le=MAX_ORDER)
    p_max: int = Field(6, ge=1, le=MAX_ORDER)
    sensor_low: float = Field(1e-3, gt=0.0)
    sensor_high: float = Field(1.0, gt=0.0)

    @model_validator(mode="after")
    def _ordered(self) -> "AdaptationConfig":
        if self.p_min > self.p_max:
            raise ValueError(f"minimum order {self.p_min} exceeds maximum order {self.p_max}")
        if not self.sensor_low < self.sensor_high:
            raise ValueError("adaptation sensor low must be below adaptation sensor high")
        return self


@dataclass(frozen=True)
class TauEstimate:
    """Truncation-error magnitude per element and candidate order triple."""

    candidates: Tuple[Tuple[OrderTriple, ...], ...]
    values: Tuple[np.ndarray, ...]

    def for_element(self, e: int) -> Dict[OrderTriple, float]:
        return dict(zip(self.candidates[e], (float(v) for v in self.values[e])))

    def __len__(self) -> int:
        return len(self.candidates)


class AdaptationResult(NamedTuple):
    field: SolutionField
    orders: OrderMap
    discretization: Discretization


def feature_sensor(field: SolutionField, disc: Discretization) -> np.ndarray:
    """Per-element integral of J |grad_xi rho|^2 (shared with shock capturing)."""
    return shock_sensor(field, disc)


# -- projection ---------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def transfer_matrix(old: int, new: int, kind: NodeKind) -> np.ndarray:
    """1D operator taking nodal values of order ``old`` to order ``new``.

    Interpolation when the order grows, L2 projection with the exact
    mass matrix (Gauss quadrature of sufficient degree) when it shrinks.
    """
    source = build_basis(old, kind)
    target = build_basis(new, kind)
    if new >= old:
        matrix = interpolation_matrix(source, target.nodes)
    else:
        quadrature = build_basis(old + 1, NodeKind.GAUSS)
        at_target = interpolation_matrix(target, quadrature.nodes)
        at_source = interpolation_matrix(source, quadrature.nodes)
        mass = at_target.T @ (quadrature.weights[:, None] * at_target)
        mixed = at_target.T @ (quadrature.weights[:, None] * at_source)
        matrix = linalg.cho_solve(linalg.cho_factor(mass), mixed)
    matrix.setflags(write=False)
    return matrix


def project_solution(
    field: SolutionField,
    new_orders: OrderMap,
    kind: NodeKind | str = NodeKind.GAUSS_LOBATTO,
    *,
    source: Optional[Discretization] = None,
    target: Optional[Discretization] = None,
) -> SolutionField:
    """Transfer ``field`` to ``new_orders`` element by element, axis by axis.

    Without discretizations nodal values are transferred as they are, which
    preserves J-weighted integrals on affine elements only. With ``source``
    and ``target`` every element whose order drops along some axis gets a
    constant shift per variable so its J-weighted integral under ``target``
    equals the one under ``source``. Element volumes do not depend on the
    orders, so constant states stay constant.

    Args:
        field (SolutionField): Data at the current orders.
        new_orders (OrderMap): Orders to transfer to.
        kind (NodeKind | str): Node family of both order maps.
        source (Optional[Discretization]): Operator at ``field.orders``.
        target (Optional[Discretization]): Operator at ``new_orders``.

    Raises:
        InvalidOrderError: If the maps cover different element counts or the
            discretizations do not match the order maps.
    """
    if len(new_orders) != len(field.orders):
        raise InvalidOrderError(
            f"Order map has {len(new_orders)} elements, field has {len(field.orders)}"
        )
    if (source is None) != (target is None):
        raise InvalidOrderError("Conservative transfer needs both source and target operators")
    if source is not None and (
        source.orders.orders != field.orders.orders or target.orders.orders != new_orders.orders
    ):
        raise InvalidOrderError("Discretization orders do not match the transferred field")
    kind = NodeKind(kind)
    result = SolutionField(new_orders, time=field.time, nvar=field.nvar)
    pairs: Dict[Tuple[OrderTriple, OrderTriple], List[int]] = {}
    for e, (old, new) in enumerate(zip(field.orders, new_orders)):
        pairs.setdefault((old, new), []).append(e)
    for (old, new), elements in pairs.items():
        values = np.stack([field.element(e) for e in elements])
        if old != new:
            for a in range(3):
                values = along_axis(transfer_matrix(old[a], new[a], kind), values, a)
        for e, v in zip(elements, values):
            result.set_element(e, v)

    lowered = [
        e
        for e, (old, new) in enumerate(zip(field.orders, new_orders))
        if any(q < p for p, q in zip(old, new))
    ]
    if source is not None and lowered:
        before = source.element_integrals(field)
        after = target.element_integrals(result)
        volumes = target.element_integrals(result, lambda u: np.ones_like(u[:1]))[0]
        shift = (before - after) / volumes
        for e in lowered:
            result.set_element(e, result.element(e) + shift[:, e, None, None, None])
    return result


# -- truncation error ---------------------------------------------------------


def candidate_orders(current: OrderTriple, p_min: int) -> List[OrderTriple]:
    """Isotropic ladder plus single-axis decrements below ``current``.

    Sorted by total order, then lexicographically.
    """
    found = set()
    for q in range(p_min, max(current)):
        found.add(tuple(min(q, p) for p in current))
    for axis, p in enumerate(current):
        for q in range(p_min, p):
            triple = list(current)
            triple[axis] = q
            found.add(tuple(triple))
    found.discard(tuple(current))
    return sorted(found, key=lambda t: (sum(t), t))


def _check_candidates(current: OrderTriple, candidates: Sequence[OrderTriple], e: int) -> None:
    for triple in candidates:
        if any(c > p for c, p in zip(triple, current)) or tuple(triple) == tuple(current):
            raise InvalidOrderError(
                f"Candidate {tuple(triple)} of element {e} is not below {current}",
                element=e,
                candidate=tuple(triple),
            )


def tau_estimate(
    field: SolutionField,
    disc: Discretization,
    candidates: Optional[Sequence[Sequence[OrderTriple]]] = None,
) -> TauEstimate:
    """Truncation-error estimates on coarser candidate orders.

    For every candidate the solution and its residual are moved to the
    candidate orders and the candidate-order residual of the moved solution
    is compared with the moved residual:
    ``tau = || R_c(Pi u) - Pi R(u) ||`` in the J-weighted quadrature norm.
    On a steady solution this reduces to ``|| R_c(Pi u) ||``.

    Args:
        field (SolutionField): Current solution.
        disc (Discretization): Operator at the current orders.
        candidates: Candidate triples per element; defaults to :func:`candidate_orders`.

    Raises:
        InvalidOrderError: If a candidate is not strictly below the current orders.
        ConfigurationError: If no element has a candidate.
    """
    orders = field.orders
    if candidates is None:
        candidates = [candidate_orders(p, orders.p_min) for p in orders]
    candidates = [tuple(tuple(int(p) for p in c) for c in cs) for cs in candidates]
    if len(candidates) != len(orders):
        raise InvalidOrderError("Need one candidate list per element")
    for e, cs in enumerate(candidates):
        _check_candidates(orders[e], cs, e)
    depth = max((len(cs) for cs in candidates), default=0)
    if depth == 0:
        raise ConfigurationError("No candidate orders to estimate")

    residual = disc.residual(field)
    values = [np.zeros(len(cs)) for cs in candidates]
    for k in range(depth):
        triples = [cs[min(k, len(cs) - 1)] if cs else orders[e] for e, cs in enumerate(candidates)]
        level = OrderMap(tuple(triples), p_min=1, p_max=orders.p_max)
        coarse_disc = disc.with_orders(level)
        coarse = project_solution(field, level, disc.kind, source=disc, target=coarse_disc)
        injected = project_solution(
            residual, level, disc.kind, source=disc, target=coarse_disc
        )
        difference = coarse_disc.residual(coarse)
        difference.data -= injected.data
        norms = np.sqrt(
            np.sum(coarse_disc.element_integrals(difference, lambda r: r * r), axis=0)
        )
        for e, cs in enumerate(candidates):
            if k < len(cs):
                values[e][k] = norms[e]
        logger.debug("Estimated truncation error", level=k, operation="tau_estimate")
    return TauEstimate(tuple(candidates), tuple(values))


def _extrapolate(candidates, values, current: OrderTriple, threshold: float, p_max: int) -> int:
    ladder = [
        (c[0], v) for c, v in zip(candidates, values) if c[0] == c[1] == c[2] and v > 0
    ]
    if len(ladder) < 2:
        return p_max
    p = np.array([q for q, _ in ladder], dtype=float)
    logs = np.log10([v for _, v in ladder])
    slope, intercept = np.polyfit(p, logs, 1)
    if slope >= 0:
        return p_max
    crossing = (math.log10(threshold) - intercept) / slope
    return int(min(max(math.ceil(crossing - CROSSING_SLACK), max(current)), p_max))


def select_orders(tau: TauEstimate, threshold: float, current: OrderMap) -> OrderMap:
    """Smallest candidate meeting ``threshold`` per element, else an extrapolated order.

    When no candidate meets the threshold, ``log10 tau`` is fitted against
    the isotropic candidates by least squares and the first order whose
    predicted estimate meets the threshold is used, isotropically, clamped
    to ``[max(current), p_max]``. Elements without candidates keep their orders.

    Raises:
        ConfigurationError: If ``threshold <= 0``.
    """
    if not threshold > 0:
        raise ConfigurationError(f"Threshold must be positive, got {threshold}")
    selected = []
    for e in range(len(current)):
        cands = tau.candidates[e]
        vals = tau.values[e]
        if not cands:
            # Already at the lowest order.
            selected.append(current[e])
            continue
        meeting = [c for c, v in zip(cands, vals) if v <= threshold]
        if meeting:
            best = min(meeting, key=lambda t: (sum(t), t))
            selected.append(tuple(max(p, current.p_min) for p in best))
        else:
            p = _extrapolate(cands, vals, current[e], threshold, current.p_max)
            selected.append((p, p, p))
    return current.replace(selected)


def feature_orders(sensor: np.ndarray, config: AdaptationConfig, current: OrderMap) -> OrderMap:
    """Map sensor values log-linearly between ``p_min`` and ``p_max``."""
    low, high = math.log10(config.sensor_low), math.log10(config.sensor_high)
    span = config.p_max - config.p_min
    selected = []
    for s in np.asarray(sensor, dtype=float):
        if s <= config.sensor_low:
            p = config.p_min
        elif s >= config.sensor_high:
            p = config.p_max
        else:
            fraction = (math.log10(s) - low) / (high - low)
            p = config.p_min + int(round(fraction * span))
        selected.append((p, p, p))
    return OrderMap(tuple(selected), p_min=config.p_min, p_max=config.p_max)


def adapt(
    field: SolutionField,
    disc: Discretization,
    mode: AdaptationMode | str,
    params: AdaptationConfig,
) -> AdaptationResult:
    """Select new orders, transfer the solution and rebuild the operator.

    Returns:
        AdaptationResult: Transferred field, new orders and the rebuilt
        discretization (new mortars included).
    """
    mode = AdaptationMode(mode)
    if mode is AdaptationMode.FEATURE:
        sensor = feature_sensor(field, disc)
        new_orders = feature_orders(sensor, params, field.orders)
    else:
        current = OrderMap(field.orders.orders, p_min=params.p_min, p_max=params.p_max)
        candidates = [candidate_orders(p, params.p_min) for p in current]
        if not any(candidates):
            logger.debug("All elements at the minimum order", mode=mode, operation="adapt")
            return AdaptationResult(field, field.orders, disc)
        tau = tau_estimate(field, disc, candidates)
        new_orders = select_orders(tau, params.threshold, current)

    if new_orders.orders == field.orders.orders:
        logger.debug("Orders unchanged", mode=mode, operation="adapt")
        return AdaptationResult(field, field.orders, disc)

    new_disc = disc.with_orders(new_orders)
    new_field = project_solution(
        field, new_orders, disc.kind, source=disc, target=new_disc
    )
    changed = sum(a != b for a, b in zip(field.orders, new_orders))
    logger.info(
        "Adapted polynomial orders",
        mode=mode,
        changed_elements=changed,
        dofs=int(new_field.data.size),
        error_code=ErrorCodes.SUCCESS,
        operation="adapt",
    )
    return AdaptationResult(new_field, new_orders, new_disc)
