"""Troubled-element sensing and SVV-filtered artificial dissipation.

The artificial flux is the Navier-Stokes viscous operator written in
entropy-variable gradients, ``F = B G`` with ``B`` symmetric positive
semidefinite per node. Only one half of its ``L^T D L`` split is filtered,

    F_filtered = (1 / sqrt(J)) L^T sqrt(D) Filter(sqrt(J D) L G),

which keeps the entropy production ``sum w J G : F`` non-negative for any
kernel with factors in [0, 1].
"""

import enum
import math
from typing import TYPE_CHECKING, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .basis import NodalBasis, along_axis
from .exceptions import NumericalValidityError
from .logging_config import ErrorCodes, get_logger
from .physics import GasProperties

if TYPE_CHECKING:
    from .field import SolutionField
    from .spatial import Discretization

logger = get_logger(__name__)

PIVOT_TOLERANCE = 1e-12
EXPONENTIAL_ALPHA = -math.log(1e-14)
# Gradient components are flattened direction-major: index = 5 * d + j.
NFLAT = 15


class FilterKind(str, enum.Enum):
    IDENTITY = "identity"
    TADMOR = "tadmor"
    EXPONENTIAL = "exponential"


class FilterKernel(BaseModel):
    """Per-mode attenuation of the filtered half of the artificial flux.

    Attributes:
        kind (FilterKind): Kernel family.
        cutoff (int): Modes ``k <= cutoff`` pass unchanged.
        alpha (float): Exponential strength, ``F_P = exp(-alpha)``.
        exponent (int): Exponential order ``p`` in ``exp(-alpha x^(2p))``.
    """

    model_config = ConfigDict(frozen=True)

    kind: FilterKind = FilterKind.EXPONENTIAL
    cutoff: int = Field(0, ge=0)
    alpha: float = Field(EXPONENTIAL_ALPHA, gt=0.0)
    exponent: int = Field(2, ge=1)

    def factors(self, order: int) -> np.ndarray:
        """Attenuation factors F_0 .. F_P, non-increasing with F_0 = 1."""
        k = np.arange(order + 1, dtype=float)
        m = self.cutoff
        if self.kind is FilterKind.IDENTITY or m >= order:
            return np.ones(order + 1)
        above = k > m
        out = np.ones(order + 1)
        if self.kind is FilterKind.EXPONENTIAL:
            x = (k[above] - m) / (order - m)
            out[above] = np.exp(-self.alpha * x ** (2 * self.exponent))
        else:
            # Complement of the vanishing-viscosity amplitude exp(-((k-P)/(k-m))^2).
            x = (k[above] - order) / (k[above] - m)
            out[above] = 1.0 - np.exp(-(x**2))
        return out


class ArtificialFluxConfig(BaseModel):
    """Artificial-viscosity scale, sensor thresholds and filter kernel."""

    model_config = ConfigDict(frozen=True)

    mu_a: float = Field(0.0, ge=0.0)
    s_low: float = 1e-2
    s_high: float = 1.0
    kernel: FilterKernel = FilterKernel()

    @model_validator(mode="after")
    def _ordered_thresholds(self) -> "ArtificialFluxConfig":
        if not self.s_low < self.s_high:
            raise ValueError(
                f"sensor low ({self.s_low}) must be below sensor high ({self.s_high})"
            )
        return self


def density_sensor(
    rho: np.ndarray, jacobian: np.ndarray, bases: Sequence[NodalBasis]
) -> np.ndarray:
    """Per-element integral of J |grad_xi rho|^2 over the reference cube.

    Args:
        rho (np.ndarray): Densities, shape (E, n1, n2, n3).
        jacobian (np.ndarray): Mapping Jacobians, same shape.
        bases (Sequence[NodalBasis]): Bases of the three axes.

    Returns:
        np.ndarray: Non-negative sensor values, shape (E,).
    """
    weights = np.einsum("i,j,k->ijk", *(b.weights for b in bases))
    squared = sum(along_axis(bases[a].diff_matrix, rho, a) ** 2 for a in range(3))
    return np.einsum("eijk,eijk,ijk->e", squared, jacobian, weights)


def shock_sensor(field: "SolutionField", disc: "Discretization") -> np.ndarray:
    """Density-gradient sensor of every element, in element order."""
    sensor = np.zeros(len(field.orders))
    for key, elements in field.groups.items():
        group = disc.group(key)
        sensor[elements] = density_sensor(
            field.block(key)[:, 0], group.jacobian, group.bases
        )
    return sensor


def smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def blend_artificial_viscosity(
    sensor: np.ndarray, config: ArtificialFluxConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """Map sensor values to artificial viscosity and kernel blending.

    Returns:
        Tuple[np.ndarray, np.ndarray]: ``mu_a`` per element and the blend
        factor ``b`` in [0, 1]; the effective kernel is ``(1 - b) F + b``,
        so saturated elements receive unfiltered dissipation.
    """
    x = (np.asarray(sensor, dtype=float) - config.s_low) / (config.s_high - config.s_low)
    b = smoothstep(x)
    return config.mu_a * b, b


def entropy_viscous_operator(
    u: np.ndarray, gas: GasProperties, mu=1.0
) -> np.ndarray:
    """Symmetric matrix B with flux[5d+j] = (B g)[...] per node, shape (..., 15, 15).

    ``B`` is the Navier-Stokes viscous operator (viscosity ``mu``, matching
    Prandtl-number conductivity) acting on entropy-variable gradients.
    """
    rho = u[0]
    v = u[1:4] / rho
    p = (gas.gamma - 1.0) * (u[4] - 0.5 * rho * np.sum(v * v, axis=0))
    theta = p / rho / (gas.gamma - 1.0)
    mu = np.asarray(mu, dtype=float)
    kappa = gas.gamma * gas.gas_constant * mu / ((gas.gamma - 1.0) * gas.prandtl)
    heat = kappa * (gas.gamma - 1.0) * theta**2 / gas.gas_constant

    shape = u.shape[1:]
    b = np.zeros(shape + (NFLAT, NFLAT))
    for column in range(NFLAT):
        d0, j0 = divmod(column, 5)
        g = np.zeros((3, 5) + shape)
        g[d0, j0] = 1.0
        # dv_j/dx_d = theta (g[d, j+1] + v_j g[d, 4])
        grad_v = theta * (g[:, 1:4] + v[None] * g[:, 4:5])
        div = grad_v[0, 0] + grad_v[1, 1] + grad_v[2, 2]
        tau = mu * (grad_v + np.swapaxes(grad_v, 0, 1))
        for i in range(3):
            tau[i, i] -= (2.0 / 3.0) * mu * div
        flux = np.zeros((3, 5) + shape)
        flux[:, 1:4] = tau
        flux[:, 4] = np.einsum("dj...,j...->d...", tau, v) + heat * g[:, 4]
        b[..., column] = np.moveaxis(flux.reshape((NFLAT,) + shape), 0, -1)
    return 0.5 * (b + np.swapaxes(b, -1, -2))


def ldl(b: np.ndarray, tolerance: float = PIVOT_TOLERANCE) -> Tuple[np.ndarray, np.ndarray]:
    """Factor symmetric positive semidefinite matrices as ``L^T diag(D) L``.

    Pivots within ``tolerance`` (relative to the largest diagonal entry)
    are clamped to zero together with their column.

    Args:
        b (np.ndarray): Matrices, shape (..., n, n).
        tolerance (float): Relative pivot tolerance.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Unit upper-triangular ``L`` (..., n, n)
        and pivots ``D`` (..., n).

    Raises:
        NumericalValidityError: On a pivot below ``-tolerance``; names the node.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[-1]
    batch = b.shape[:-2]
    scale = np.max(np.abs(np.diagonal(b, axis1=-2, axis2=-1)), axis=-1, initial=0.0)
    tol = tolerance * np.where(scale > 0, scale, 1.0)
    lower = np.zeros_like(b)
    d = np.zeros(batch + (n,))
    for j in range(n):
        lj = lower[..., j, :j]
        pivot = b[..., j, j] - np.sum(lj * lj * d[..., :j], axis=-1)
        if np.any(pivot < -tol):
            node = tuple(int(i) for i in np.argwhere(pivot < -tol)[0])
            logger.error(
                "Indefinite artificial viscosity matrix",
                node=node,
                pivot=float(pivot[node]),
                error_code=ErrorCodes.NUMERICAL_VALIDITY,
                operation="ldl",
            )
            raise NumericalValidityError(
                f"Negative pivot {float(pivot[node]):.3e} at node {node}",
                node=node,
                column=j,
            )
        keep = pivot > tol
        d[..., j] = np.where(keep, pivot, 0.0)
        lower[..., j, j] = 1.0
        if j + 1 < n:
            rest = b[..., j + 1 :, j] - np.einsum(
                "...ik,...k->...i", lower[..., j + 1 :, :j], lj * d[..., :j]
            )
            safe = np.where(keep, pivot, 1.0)[..., None]
            lower[..., j + 1 :, j] = np.where(keep[..., None], rest / safe, 0.0)
    return np.swapaxes(lower, -1, -2), d


def modal_filter(
    values: np.ndarray, bases: Sequence[NodalBasis], factors: np.ndarray
) -> np.ndarray:
    """Scale the Legendre modes of (..., E, n1, n2, n3) data by ``factors`` (E, n1, n2, n3)."""
    modes = values
    for a in range(3):
        modes = along_axis(bases[a].modal_forward, modes, a)
    modes = modes * factors
    for a in range(3):
        modes = along_axis(bases[a].modal_backward, modes, a)
    return modes


def kernel_factors(
    kernel: FilterKernel, bases: Sequence[NodalBasis], blend=0.0
) -> np.ndarray:
    """Tensor factors ``(1 - b) Fx Fy Fz + b``, shape (E, n1, n2, n3) or (n1, n2, n3)."""
    tensor = np.einsum("i,j,k->ijk", *(kernel.factors(b.order) for b in bases))
    blend = np.asarray(blend, dtype=float)
    if blend.ndim == 0:
        return (1.0 - blend) * tensor + blend
    b = blend[:, None, None, None]
    return (1.0 - b) * tensor[None] + b


def svv_filtered_flux(
    u: np.ndarray,
    grad_w: np.ndarray,
    kernel: FilterKernel,
    mu_a,
    jacobian: np.ndarray,
    bases: Sequence[NodalBasis],
    gas: GasProperties,
    blend=0.0,
) -> np.ndarray:
    """Filtered artificial flux of a group of elements, shape (5, 3, E, n1, n2, n3).

    Args:
        u (np.ndarray): States, shape (5, E, n1, n2, n3).
        grad_w (np.ndarray): Entropy-variable gradients, shape (3, 5, E, n1, n2, n3).
        kernel (FilterKernel): Filter applied to the scaled half.
        mu_a: Artificial viscosity, scalar or per element (E,).
        jacobian (np.ndarray): Mapping Jacobians, shape (E, n1, n2, n3).
        bases (Sequence[NodalBasis]): Gauss-Lobatto bases of the three axes.
        gas (GasProperties): Gas model (gamma, R, Pr).
        blend: Per-element (or scalar) blending toward the identity kernel.
    """
    mu = np.asarray(mu_a, dtype=float)
    if mu.ndim == 1:
        mu = mu[:, None, None, None]
    if not np.any(mu > 0):
        return np.zeros((5, 3) + u.shape[1:])

    b = entropy_viscous_operator(u, gas, mu)
    lmat, d = ldl(b)
    shape = u.shape[1:]
    g = np.moveaxis(grad_w.reshape((NFLAT,) + shape), 0, -1)
    root_j = np.sqrt(jacobian)[..., None]
    root_d = np.sqrt(d)
    y = root_j * root_d * np.einsum("...ij,...j->...i", lmat, g)
    y = np.moveaxis(y, -1, 0)
    y = modal_filter(y, bases, kernel_factors(kernel, bases, blend))
    y = np.moveaxis(y, 0, -1)
    flux = np.einsum("...ji,...j->...i", lmat, root_d * y) / root_j
    return np.moveaxis(flux, -1, 0).reshape((3, 5) + shape).swapaxes(0, 1)
