"""Catalogue of initial conditions."""

import enum
import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import ConfigurationError, ParameterError
from .field import SolutionField
from .logging_config import ErrorCodes, get_logger
from .physics import GasProperties, conservative_from_primitive

logger = get_logger(__name__)

# Kinetic energy of the Taylor-Green initialization on [0, 2 pi]^3.
TAYLOR_GREEN_KINETIC_ENERGY = math.pi**3


class InitialConditionKind(str, enum.Enum):
    UNIFORM = "uniform"
    ISENTROPIC_VORTEX = "isentropic-vortex"
    TAYLOR_GREEN = "taylor-green"


class InitialConditionConfig(BaseModel):
    """Initial condition name and parameters.

    Attributes:
        name (InitialConditionKind): Catalogue entry.
        density (float): Background density.
        velocity (Tuple[float, float, float]): Background (advection) velocity.
        pressure (float): Background pressure.
        mach (float): Reference Mach number of the Taylor-Green vortex.
        vortex_strength (float): Isentropic vortex strength beta.
        vortex_radius (float): Isentropic vortex core radius.
        vortex_center (Optional[Tuple[float, float]]): Initial (x, y) of the
            vortex core; the box center when omitted.
    """

    model_config = ConfigDict(frozen=True)

    name: InitialConditionKind = InitialConditionKind.UNIFORM
    density: float = Field(1.0, gt=0.0)
    velocity: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    pressure: float = Field(1.0, gt=0.0)
    mach: float = Field(0.1, gt=0.0)
    vortex_strength: float = Field(5.0, ge=0.0)
    vortex_radius: float = Field(1.0, gt=0.0)
    vortex_center: Optional[Tuple[float, float]] = None


def uniform_state(x: np.ndarray, config: InitialConditionConfig, gas: GasProperties) -> np.ndarray:
    state = conservative_from_primitive(
        config.density, np.asarray(config.velocity), config.pressure, gas.gamma
    )
    return np.broadcast_to(
        state.reshape((5,) + (1,) * (x.ndim - 1)), (5,) + x.shape[1:]
    ).copy()


def isentropic_vortex(
    x: np.ndarray,
    t: float,
    config: InitialConditionConfig,
    gas: GasProperties,
    lower: Tuple[float, float, float],
    upper: Tuple[float, float, float],
) -> np.ndarray:
    """Exact advecting vortex at time ``t`` on a box periodic in x and y.

    The background flow has density ``config.density``, pressure
    ``config.pressure`` and velocity ``config.velocity``. The core has
    radius ``config.vortex_radius``; distances to it use the nearest
    periodic image.

    Raises:
        ParameterError: If the core temperature would not be positive.
    """
    g = gas.gamma
    beta = config.vortex_strength
    radius = config.vortex_radius
    t_inf = config.pressure / config.density
    drop = (g - 1.0) * beta**2 / (8.0 * g * math.pi**2)
    if drop * math.e >= t_inf:
        logger.error(
            "Vortex core temperature not positive",
            vortex_strength=beta,
            density=config.density,
            pressure=config.pressure,
            error_code=ErrorCodes.PARAMETER_ERROR,
            operation="isentropic_vortex",
        )
        raise ParameterError(
            f"Vortex strength {beta} is too large for background p/rho = {t_inf}",
            vortex_strength=beta,
        )
    lower_arr = np.asarray(lower, dtype=float)
    extent = np.asarray(upper, dtype=float) - lower_arr
    center = (
        np.asarray(config.vortex_center, dtype=float)
        if config.vortex_center is not None
        else lower_arr[:2] + 0.5 * extent[:2]
    )
    shifted = center + np.asarray(config.velocity[:2]) * t
    d = []
    for axis in range(2):
        offset = x[axis] - shifted[axis]
        length = extent[axis]
        d.append((offset - length * np.round(offset / length)) / radius)
    dx, dy = d
    r2 = dx * dx + dy * dy
    temperature = t_inf - drop * np.exp(1.0 - r2)
    ratio = temperature / t_inf
    rho = config.density * ratio ** (1.0 / (g - 1.0))
    p = config.pressure * ratio ** (g / (g - 1.0))
    amplitude = beta / (2.0 * math.pi) * np.exp(0.5 * (1.0 - r2))
    velocity = np.empty_like(x)
    velocity[0] = config.velocity[0] - amplitude * dy
    velocity[1] = config.velocity[1] + amplitude * dx
    velocity[2] = config.velocity[2]
    return conservative_from_primitive(rho, velocity, p, g)


def taylor_green(x: np.ndarray, config: InitialConditionConfig, gas: GasProperties) -> np.ndarray:
    """Taylor-Green vortex on [0, 2 pi]^3 at Mach ``config.mach`` (isothermal start)."""
    p0 = 1.0 / (gas.gamma * config.mach**2)
    sx, cx = np.sin(x[0]), np.cos(x[0])
    sy, cy = np.sin(x[1]), np.cos(x[1])
    cz = np.cos(x[2])
    velocity = np.stack([sx * cy * cz, -cx * sy * cz, np.zeros_like(cz)])
    p = p0 + (np.cos(2 * x[0]) + np.cos(2 * x[1])) * (np.cos(2 * x[2]) + 2.0) / 16.0
    rho = p / p0
    return conservative_from_primitive(rho, velocity, p, gas.gamma)


def taylor_green_vorticity(x: np.ndarray) -> np.ndarray:
    """Analytic curl of the Taylor-Green initial velocity."""
    sx, cx = np.sin(x[0]), np.cos(x[0])
    sy, cy = np.sin(x[1]), np.cos(x[1])
    sz, cz = np.sin(x[2]), np.cos(x[2])
    return np.stack([-cx * sy * sz, -sx * cy * sz, 2.0 * sx * sy * cz])


def evaluate(
    config: InitialConditionConfig,
    x: np.ndarray,
    gas: GasProperties,
    lower=(0.0, 0.0, 0.0),
    upper=(1.0, 1.0, 1.0),
    t: float = 0.0,
) -> np.ndarray:
    """Conservative state of ``config`` at points ``x`` (3, ...)."""
    if config.name is InitialConditionKind.UNIFORM:
        return uniform_state(x, config, gas)
    if config.name is InitialConditionKind.ISENTROPIC_VORTEX:
        return isentropic_vortex(x, t, config, gas, lower, upper)
    if config.name is InitialConditionKind.TAYLOR_GREEN:
        return taylor_green(x, config, gas)
    raise ConfigurationError(f"Unknown initial condition '{config.name}'")


def initial_condition(
    config: InitialConditionConfig | str, disc, t: float = 0.0
) -> SolutionField:
    """Sample an initial condition at the solution nodes of ``disc``.

    Args:
        config (InitialConditionConfig | str): Catalogue entry or its name.
        disc (Discretization): Operator providing node coordinates.
        t (float): Evaluation time (exact solutions only).

    Raises:
        ConfigurationError: Unknown name.
    """
    if isinstance(config, str):
        try:
            config = InitialConditionConfig(name=config)
        except ValueError as e:
            logger.error(
                "Unknown initial condition",
                name=config,
                error_code=ErrorCodes.CONFIGURATION_ERROR,
                operation="initial_condition",
            )
            raise ConfigurationError(f"Unknown initial condition '{config}'") from e
    spec = disc.mesh.spec
    field = SolutionField(disc.orders, time=t)
    for key, group in disc.groups.items():
        state = evaluate(config, group.coordinates, disc.gas, spec.lower, spec.upper, t)
        field.block(key)[...] = np.moveaxis(state, 0, 1)
    logger.debug(
        "Sampled initial condition", name=config.name, operation="initial_condition"
    )
    return field
