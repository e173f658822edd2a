"""Shared fixtures: small box discretizations and smooth admissible states."""

import json
from typing import Any, Dict, Optional

import numpy as np
import pytest

from dgflow.core.basis import NodeKind
from dgflow.core.field import OrderMap, SolutionField
from dgflow.core.mesh import CurvatureSpec, MeshSpec, build_box_mesh
from dgflow.core.physics import GasProperties, RiemannSolver, conservative_from_primitive
from dgflow.core.spatial import Discretization


@pytest.fixture
def gas() -> GasProperties:
    return GasProperties()


@pytest.fixture
def make_disc(gas):
    """Factory for periodic box discretizations on [0, 1]^3 by default."""

    def build(
        elements=(2, 2, 2),
        order=3,
        *,
        orders: Optional[OrderMap] = None,
        upper=(1.0, 1.0, 1.0),
        amplitude: float = 0.0,
        kind=NodeKind.GAUSS_LOBATTO,
        riemann=RiemannSolver.LAX_FRIEDRICHS,
        volume_flux=None,
        gas_model: Optional[GasProperties] = None,
        threads: int = 1,
        **kwargs: Any,
    ) -> Discretization:
        spec = MeshSpec(
            elements=elements,
            upper=upper,
            curvature=CurvatureSpec(amplitude=amplitude) if amplitude else None,
        )
        mesh = build_box_mesh(spec)
        if orders is None:
            orders = OrderMap.uniform(mesh.n_elements, order)
        return Discretization(
            mesh,
            orders,
            gas_model or gas,
            kind=kind,
            riemann=riemann,
            volume_flux=volume_flux,
            threads=threads,
            **kwargs,
        )

    return build


def smooth_state(x: np.ndarray, gamma: float = 1.4) -> np.ndarray:
    """Periodic admissible state on the unit cube."""
    two_pi = 2.0 * np.pi
    rho = 1.0 + 0.2 * np.sin(two_pi * x[0]) * np.cos(two_pi * x[1])
    velocity = np.stack(
        [
            0.3 + 0.1 * np.sin(two_pi * x[2]),
            -0.2 + 0.1 * np.cos(two_pi * x[0]),
            0.1 * np.sin(two_pi * x[1]),
        ]
    )
    p = 1.0 + 0.1 * np.cos(two_pi * (x[0] + x[2]))
    return conservative_from_primitive(rho, velocity, p, gamma)


@pytest.fixture
def smooth_field():
    """Sample :func:`smooth_state` (or another state function) at the nodes of a discretization."""

    def sample(disc: Discretization, state=smooth_state) -> SolutionField:
        field = SolutionField(disc.orders)
        for key, group in disc.groups.items():
            field.block(key)[...] = np.moveaxis(
                state(group.coordinates, disc.gas.gamma), 0, 1
            )
        return field

    return sample


@pytest.fixture
def uniform_field():
    def sample(disc: Discretization, rho=1.0, velocity=(0.3, -0.2, 0.1), p=1.0) -> SolutionField:
        state = conservative_from_primitive(rho, np.asarray(velocity), p, disc.gas.gamma)
        field = SolutionField(disc.orders)
        for key in field.groups:
            field.block(key)[...] = state[None, :, None, None, None]
        return field

    return sample


def get_log_message(
    caplog: pytest.LogCaptureFixture, level: str, operation: str
) -> Dict[str, Any]:
    """Find the first structured log record with ``level`` and ``operation``.

    Returns:
        dict: The record's event dict plus its level, or an empty dict.
    """
    for record in caplog.records:
        try:
            log_data = (
                json.loads(record.msg) if isinstance(record.msg, str) else record.msg
            )
        except (json.JSONDecodeError, TypeError):
            continue
        if (
            record.levelname == level
            and isinstance(log_data, dict)
            and log_data.get("operation") == operation
        ):
            return {"level": record.levelname, **log_data}
    return {}


@pytest.fixture
def log_message():
    return get_log_message
