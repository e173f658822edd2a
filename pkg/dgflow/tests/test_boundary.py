import numpy as np
import pytest
from pydantic import ValidationError

from dgflow.core.boundary import (
    BoundaryCondition,
    BoundaryKind,
    boundary_state,
    boundary_viscous_flux,
)
from dgflow.core.exceptions import ConfigurationError
from dgflow.core.physics import (
    GasProperties,
    RiemannSolver,
    conservative_from_primitive,
    pressure,
    riemann_flux,
)

GAS = GasProperties()
NORMAL = np.array([0.0, 0.6, 0.8])


@pytest.fixture
def interior() -> np.ndarray:
    return conservative_from_primitive(1.3, np.array([0.4, -0.5, 0.7]), 0.9, GAS.gamma)


def test_free_stream_ghost(interior):
    bc = BoundaryCondition(
        tag="farfield", kind="freestream", density=1.0, velocity=(0.5, 0.0, 0.0), pressure=2.0
    )
    result = boundary_state(bc, np.stack([interior, interior], axis=1), NORMAL[:, None], GAS)
    expected = conservative_from_primitive(1.0, np.array([0.5, 0.0, 0.0]), 2.0, GAS.gamma)
    assert result.heat_flux
    assert result.ghost.shape == (5, 2)
    np.testing.assert_allclose(result.ghost[:, 1], expected)


def test_free_stream_state_must_be_admissible():
    with pytest.raises(ValidationError, match="positive density and pressure"):
        BoundaryCondition(tag="inflow", kind=BoundaryKind.FREE_STREAM, density=0.0)
    # Walls ignore the free-stream fields.
    BoundaryCondition(tag="wall", kind=BoundaryKind.INVISCID_WALL, density=0.0)


def test_inviscid_wall_reflects_normal_momentum(interior):
    bc = BoundaryCondition(tag="wall", kind="inviscid wall")
    ghost = boundary_state(bc, interior, NORMAL, GAS).ghost

    assert ghost[0] == interior[0]
    assert ghost[4] == interior[4]
    assert ghost[1:4] @ NORMAL == pytest.approx(-(interior[1:4] @ NORMAL))
    tangent = np.array([0.0, 0.8, -0.6])
    assert ghost[1:4] @ tangent == pytest.approx(interior[1:4] @ tangent)

    flux = riemann_flux(RiemannSolver.LAX_FRIEDRICHS, interior, ghost, NORMAL, GAS)
    assert flux[0] == pytest.approx(0.0, abs=1e-14)
    assert flux[4] == pytest.approx(0.0, abs=1e-14)
    # The momentum flux is the wall pressure force plus the jump penalty.
    assert flux[1:4] @ tangent == pytest.approx(0.0, abs=1e-14)


def test_no_slip_wall(interior):
    bc = BoundaryCondition(tag="wall", kind="noslip adiabatic wall")
    result = boundary_state(bc, interior, NORMAL, GAS)
    assert not result.heat_flux
    np.testing.assert_allclose(result.ghost[1:4], -interior[1:4])
    assert pressure(result.ghost, GAS.gamma) == pytest.approx(pressure(interior, GAS.gamma))


def test_periodic_has_no_ghost_state(interior):
    bc = BoundaryCondition(tag="cyclic", kind=BoundaryKind.PERIODIC)
    with pytest.raises(ConfigurationError, match="has no ghost state"):
        boundary_state(bc, interior, NORMAL, GAS)


def test_boundary_viscous_flux(interior):
    gas = GasProperties(mu=0.01)
    grad = np.zeros((3, 5))
    grad[0, 1] = 1.0  # d v1 / d x
    grad[2, 4] = 5.0  # d T / d z
    scaled_normal = 2.0 * NORMAL

    inviscid = BoundaryCondition(tag="slip", kind="inviscid wall")
    assert np.all(boundary_viscous_flux(inviscid, interior, grad, scaled_normal, gas) == 0.0)

    wall = BoundaryCondition(tag="wall", kind="noslip adiabatic wall")
    flux = boundary_viscous_flux(wall, interior, grad, scaled_normal, gas)
    # Zero wall velocity and no heat flux leave no energy flux.
    assert flux[4] == pytest.approx(0.0, abs=1e-15)
    # tau_xx = 4/3 mu, normal has no x component
    assert flux[1] == pytest.approx(0.0, abs=1e-15)

    free = BoundaryCondition(tag="far", kind="freestream")
    flux = boundary_viscous_flux(free, interior, grad, scaled_normal, gas)
    velocity = interior[1:4] / interior[0]
    tau = gas.mu * np.diag([4.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0])
    expected = velocity @ tau @ scaled_normal + gas.kappa * 5.0 * scaled_normal[2]
    assert flux[4] == pytest.approx(expected, rel=1e-12)
