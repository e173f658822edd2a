"""Explicit low-storage Runge-Kutta time marching and step-size control.

Both schemes use the two-register form

    du = A_i du + dt R(u, t + c_i dt)
    u  = u + B_i du

so the solution is updated in place and only one extra solution-sized
array is ever allocated.
"""

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .exceptions import DGFlowError, ParameterError, StageError
from .field import SolutionField
from .logging_config import ErrorCodes, get_logger
from .physics import max_wave_speed

logger = get_logger(__name__)


class RKScheme(str, enum.Enum):
    RK3 = "rk3"
    RK45 = "rk45"


@dataclass(frozen=True)
class LowStorageCoefficients:
    a: Tuple[float, ...]
    b: Tuple[float, ...]
    c: Tuple[float, ...]
    order: int

    @property
    def stages(self) -> int:
        return len(self.b)


COEFFICIENTS = {
    # Williamson, third order, three stages.
    RKScheme.RK3: LowStorageCoefficients(
        a=(0.0, -5.0 / 9.0, -153.0 / 128.0),
        b=(1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0),
        c=(0.0, 1.0 / 3.0, 3.0 / 4.0),
        order=3,
    ),
    # Carpenter-Kennedy, fourth order, five stages.
    RKScheme.RK45: LowStorageCoefficients(
        a=(
            0.0,
            -567301805773.0 / 1357537059087.0,
            -2404267990393.0 / 2016746695238.0,
            -3550918686646.0 / 2091501179385.0,
            -1275806237668.0 / 842570457699.0,
        ),
        b=(
            1432997174477.0 / 9575080441175.0,
            5161836677717.0 / 13612068292357.0,
            1720146321549.0 / 2090206949498.0,
            3134564353537.0 / 4481467310338.0,
            2277821191437.0 / 14882151754819.0,
        ),
        c=(
            0.0,
            1432997174477.0 / 9575080441175.0,
            2526269341429.0 / 6820363183890.0,
            2006345519317.0 / 3224310063776.0,
            2802321613138.0 / 2924317926251.0,
        ),
        order=4,
    ),
}


def scheme_coefficients(scheme: RKScheme | str) -> LowStorageCoefficients:
    return COEFFICIENTS[RKScheme(scheme)]


def low_storage_step(
    u: np.ndarray,
    t: float,
    dt: float,
    scheme: RKScheme | str,
    rhs: Callable[[np.ndarray, float], np.ndarray],
    register: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Advance ``u`` in place by one step of ``scheme``.

    Args:
        u (np.ndarray): Solution register, updated in place.
        t (float): Time of ``u``.
        dt (float): Step size, positive.
        scheme (RKScheme | str): Low-storage scheme.
        rhs: ``rhs(u, t)`` returning du/dt with the shape of ``u``.
        register (Optional[np.ndarray]): Reusable second register.

    Returns:
        np.ndarray: The second register after the last stage.

    Raises:
        ParameterError: If ``dt`` is not positive.
        StageError: If ``rhs`` fails; carries the stage index and chains the cause.
    """
    if not dt > 0:
        raise ParameterError(f"Time step must be positive, got {dt}", dt=dt)
    coeffs = scheme_coefficients(scheme)
    du = np.zeros_like(u) if register is None else register
    du[...] = 0.0
    for stage, (a, b, c) in enumerate(zip(coeffs.a, coeffs.b, coeffs.c)):
        try:
            r = rhs(u, t + c * dt)
        except (DGFlowError, ArithmeticError) as e:
            logger.error(
                "Residual evaluation failed",
                stage=stage,
                time=t + c * dt,
                error=str(e),
                error_code=ErrorCodes.STAGE_FAILURE,
                operation="low_storage_step",
            )
            raise StageError(
                f"Stage {stage} of {RKScheme(scheme).value} failed: {e}", stage=stage
            ) from e
        du *= a
        du += dt * r
        u += b * du
    return du


def rk_step(
    field: SolutionField,
    dt: float,
    scheme: RKScheme | str,
    residual: Callable[[SolutionField], SolutionField],
    register: Optional[np.ndarray] = None,
) -> SolutionField:
    """Advance ``field`` in place by ``dt``; ``field.time`` advances by ``dt``.

    Args:
        field (SolutionField): State, updated in place.
        dt (float): Step size.
        scheme (RKScheme | str): Low-storage scheme.
        residual: Evaluator returning du/dt of a field at ``field.time``.
        register (Optional[np.ndarray]): Reusable second register of ``field.data``'s shape.

    Returns:
        SolutionField: ``field`` itself.
    """
    start = field.time

    def rhs(data: np.ndarray, time: float) -> np.ndarray:
        field.time = time
        return residual(field).data

    try:
        low_storage_step(field.data, start, dt, scheme, rhs, register)
    finally:
        field.time = start
    field.time = start + dt
    return field


def compute_dt_cfl(field: SolutionField, disc, cfl: float, dfl: float = 0.0) -> float:
    """Stable explicit step from convective and (optionally) viscous limits.

    The convective limit is ``cfl / max sum_a (2 P_a + 1)(|v.Ja^a| + c|Ja^a|) / J``;
    the viscous limit ``dfl / max sum_a (2 P_a + 1)^2 nu |Ja^a|^2 / J^2``. When
    both apply they are combined harmonically.

    Args:
        field (SolutionField): Admissible state.
        disc (Discretization): Operator supplying metrics.
        cfl (float): Convective number, positive.
        dfl (float): Viscous number, non-negative (0 disables the viscous limit).

    Raises:
        ParameterError: On non-positive ``cfl`` or negative ``dfl``.
        AdmissibilityError: On vacuum states.
    """
    if not cfl > 0:
        raise ParameterError(f"CFL number must be positive, got {cfl}", cfl=cfl)
    if dfl < 0:
        raise ParameterError(f"DFL number must be non-negative, got {dfl}", dfl=dfl)
    gas = disc.gas
    convective = 0.0
    viscous = 0.0
    for key, group in disc.groups.items():
        u = np.moveaxis(field.block(key), 1, 0)
        speeds = max_wave_speed(u, group.contravariant, gas)
        factors = np.array([2 * p + 1 for p in key], dtype=float)
        rate = np.einsum("a,a...->...", factors, speeds) / group.jacobian
        convective = max(convective, float(np.max(rate)))
        if dfl > 0 and gas.mu > 0:
            nu = gas.mu / u[0]
            norms = np.sum(group.contravariant**2, axis=1)
            rate_v = nu * np.einsum("a,a...->...", factors**2, norms) / group.jacobian**2
            viscous = max(viscous, float(np.max(rate_v)))
    dt = cfl / convective if convective > 0 else np.inf
    if viscous > 0:
        dt = 1.0 / (1.0 / dt + viscous / dfl)
    if not np.isfinite(dt):
        raise ParameterError("No finite stable time step (zero wave speed everywhere)")
    return float(dt)
