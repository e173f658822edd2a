"""Boundary-condition catalogue and ghost-state construction."""

import enum
from typing import List, NamedTuple, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .exceptions import ConfigurationError
from .physics import GasProperties, conservative_from_primitive, viscous_flux


class BoundaryKind(str, enum.Enum):
    PERIODIC = "periodic"
    FREE_STREAM = "freestream"
    NO_SLIP_ADIABATIC_WALL = "noslip adiabatic wall"
    INVISCID_WALL = "inviscid wall"


class BoundaryCondition(BaseModel):
    """One named entry of the boundary-condition table.

    Attributes:
        tag (str): Name referenced by the mesh boundary tags.
        kind (BoundaryKind): Condition type.
        faces (List[str]): Box faces assigned to this condition.
        density (float): Free-stream density.
        velocity (Tuple[float, float, float]): Free-stream velocity.
        pressure (float): Free-stream pressure.
    """

    model_config = ConfigDict(frozen=True)

    tag: str
    kind: BoundaryKind
    faces: List[str] = []
    density: float = 1.0
    velocity: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    pressure: float = 1.0

    @model_validator(mode="after")
    def _admissible_free_stream(self) -> "BoundaryCondition":
        if self.kind is BoundaryKind.FREE_STREAM and (
            self.density <= 0 or self.pressure <= 0
        ):
            raise ValueError(
                f"Free-stream state of boundary '{self.tag}' must have positive density and pressure"
            )
        return self

    def state(self, gamma: float) -> np.ndarray:
        return conservative_from_primitive(
            self.density, np.asarray(self.velocity), self.pressure, gamma
        )


class BoundaryState(NamedTuple):
    """Ghost state plus whether the wall conducts heat."""

    ghost: np.ndarray
    heat_flux: bool


def boundary_state(
    bc: BoundaryCondition,
    interior: np.ndarray,
    normal: np.ndarray,
    gas: GasProperties,
) -> BoundaryState:
    """Exterior ghost state for a boundary face.

    Args:
        bc (BoundaryCondition): The condition.
        interior (np.ndarray): Interior trace, shape (5, ...).
        normal (np.ndarray): Outward unit normal(s), shape (3, ...).
        gas (GasProperties): Gas model.

    Returns:
        BoundaryState: Ghost state and heat-flux flag (False at adiabatic walls).

    Raises:
        ConfigurationError: For periodic or unknown kinds (not a physical boundary).
    """
    u = np.asarray(interior, dtype=float)
    if bc.kind is BoundaryKind.FREE_STREAM:
        state = bc.state(gas.gamma).reshape((5,) + (1,) * (u.ndim - 1))
        return BoundaryState(np.broadcast_to(state, u.shape).copy(), True)
    if bc.kind is BoundaryKind.INVISCID_WALL:
        ghost = u.copy()
        mn = np.sum(u[1:4] * normal, axis=0)
        ghost[1:4] = u[1:4] - 2.0 * mn * normal
        return BoundaryState(ghost, True)
    if bc.kind is BoundaryKind.NO_SLIP_ADIABATIC_WALL:
        ghost = u.copy()
        ghost[1:4] = -u[1:4]
        return BoundaryState(ghost, False)
    raise ConfigurationError(
        f"Boundary '{bc.tag}' of kind '{bc.kind.value}' has no ghost state",
        tag=bc.tag,
    )


def boundary_viscous_flux(
    bc: BoundaryCondition,
    interior: np.ndarray,
    grad: np.ndarray,
    scaled_normal: np.ndarray,
    gas: GasProperties,
    eddy_mu=0.0,
) -> np.ndarray:
    """Viscous normal flux (times surface Jacobian) on a boundary face, (5, ...).

    Free-stream faces use the interior flux. No-slip walls evaluate the
    stress at zero wall velocity and drop the heat flux. Inviscid walls
    carry no viscous flux.
    """
    if bc.kind is BoundaryKind.INVISCID_WALL:
        return np.zeros_like(interior)
    u = interior
    heat = True
    if bc.kind is BoundaryKind.NO_SLIP_ADIABATIC_WALL:
        u = interior.copy()
        u[4] -= 0.5 * np.sum(u[1:4] ** 2, axis=0) / u[0]
        u[1:4] = 0.0
        heat = False
    flux = viscous_flux(u, grad, gas, eddy_mu, heat_flux=heat)
    return np.einsum("vd...,d...->v...", flux, scaled_normal)
