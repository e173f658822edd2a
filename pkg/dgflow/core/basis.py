"""One-dimensional nodal spectral bases.

Gauss and Gauss-Lobatto node families with their quadrature weights,
Lagrange differentiation matrices, barycentric interpolation and the
Legendre modal transforms. Bases are immutable and cached by
``(order, kind)`` so thousands of elements share one instance.
"""

import enum
import functools
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import legendre

from .exceptions import DimensionError, InvalidOrderError, OutOfRangeError
from .logging_config import get_logger

logger = get_logger(__name__)

MAX_ORDER = 20
NEWTON_TOLERANCE = 1e-15
NEWTON_MAX_ITERATIONS = 100
# Targets this far outside [-1, 1] are treated as round-off and clipped.
RANGE_SLACK = 1e-14


class NodeKind(str, enum.Enum):
    """Quadrature node family."""

    GAUSS = "gauss"
    GAUSS_LOBATTO = "gauss-lobatto"


@dataclass(frozen=True, eq=False)
class NodalBasis:
    """Nodal basis on [-1, 1] for one polynomial order.

    Attributes:
        order (int): Polynomial order P.
        kind (NodeKind): Node family.
        nodes (np.ndarray): P+1 strictly increasing nodes.
        weights (np.ndarray): P+1 positive quadrature weights.
        diff_matrix (np.ndarray): D[i, j] = l_j'(x_i).
        baryweights (np.ndarray): Barycentric weights, max-normalised.
        modal_forward (np.ndarray): Nodal values to Legendre coefficients.
        modal_backward (np.ndarray): Legendre coefficients to nodal values.
        boundary_left (np.ndarray): l_j(-1).
        boundary_right (np.ndarray): l_j(+1).
        weak_diff (np.ndarray): w_m D[m, i] / w_i, the transposed weak-form operator.
    """

    order: int
    kind: NodeKind
    nodes: np.ndarray
    weights: np.ndarray
    diff_matrix: np.ndarray
    baryweights: np.ndarray
    modal_forward: np.ndarray
    modal_backward: np.ndarray
    boundary_left: np.ndarray
    boundary_right: np.ndarray
    weak_diff: np.ndarray

    @property
    def size(self) -> int:
        return self.order + 1

    def boundary(self, side: int) -> np.ndarray:
        """Return l_j(-1) for ``side == 0`` and l_j(+1) for ``side == 1``."""
        return self.boundary_right if side else self.boundary_left


def _legendre(n: int, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate L_n, L_{n-1} and L_n' at ``x`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x), np.zeros_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = n * (x * p - p_prev) / (x * x - 1.0)
    # Endpoint derivative from the closed form L_n'(+-1) = (+-1)^(n-1) n(n+1)/2.
    at_end = np.isclose(np.abs(x), 1.0, rtol=0.0, atol=1e-15)
    if np.any(at_end):
        dp = np.where(at_end, np.sign(x) ** (n - 1) * n * (n + 1) / 2.0, dp)
    return p, p_prev, dp


def _bisect_roots(func, count: int) -> np.ndarray:
    """Locate ``count`` simple roots of ``func`` in (-1, 1) by sign changes."""
    grid = np.linspace(-1.0, 1.0, 64 * (count + 2))[1:-1]
    values = func(grid)
    idx = np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]
    if idx.size != count:
        raise InvalidOrderError(
            f"Bisection bracketed {idx.size} roots, expected {count}",
            count=count,
        )
    lo, hi = grid[idx].copy(), grid[idx + 1].copy()
    f_lo = func(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = func(mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
        if np.max(hi - lo) < 1e-16:
            break
    return 0.5 * (lo + hi)


def _gauss_nodes(order: int) -> Tuple[np.ndarray, np.ndarray]:
    n = order + 1
    k = np.arange(n)
    x = -np.cos((2 * k + 1) * np.pi / (2 * n))
    converged = False
    for _ in range(NEWTON_MAX_ITERATIONS):
        p, _, dp = _legendre(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= NEWTON_TOLERANCE:
            converged = True
            break
    if not converged or np.any(np.diff(x) <= 0):
        logger.warning(
            "Newton iteration failed; falling back to bisection",
            order=order,
            kind=NodeKind.GAUSS,
            operation="build_basis",
        )
        x = _bisect_roots(lambda t: _legendre(n, t)[0], n)
    _, _, dp = _legendre(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x, w


def _gauss_lobatto_nodes(order: int) -> Tuple[np.ndarray, np.ndarray]:
    x = -np.cos(np.pi * np.arange(order + 1) / order)
    converged = False
    for _ in range(NEWTON_MAX_ITERATIONS):
        p, p_prev, _ = _legendre(order, x)
        dx = (x * p - p_prev) / ((order + 1) * p)
        x = x - dx
        if np.max(np.abs(dx)) <= NEWTON_TOLERANCE:
            converged = True
            break
    if not converged or np.any(np.diff(x) <= 0):
        logger.warning(
            "Newton iteration failed; falling back to bisection",
            order=order,
            kind=NodeKind.GAUSS_LOBATTO,
            operation="build_basis",
        )
        interior = (
            _bisect_roots(lambda t: _legendre(order, t)[2], order - 1)
            if order > 1
            else np.empty(0)
        )
        x = np.concatenate(([-1.0], interior, [1.0]))
    x[0], x[-1] = -1.0, 1.0
    p, _, _ = _legendre(order, x)
    w = 2.0 / (order * (order + 1) * p * p)
    return x, w


def _barycentric_weights(x: np.ndarray) -> np.ndarray:
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    lam = 1.0 / np.prod(diff, axis=1)
    return lam / np.max(np.abs(lam))


def _diff_matrix(x: np.ndarray, lam: np.ndarray) -> np.ndarray:
    n = x.size
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (lam[None, :] / lam[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    # Negative-sum trick: rows annihilate constants to round-off.
    d[np.arange(n), np.arange(n)] = -d.sum(axis=1)
    return d


def _readonly(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.setflags(write=False)


@functools.lru_cache(maxsize=None)
def _build_basis(order: int, kind: NodeKind) -> NodalBasis:
    if kind is NodeKind.GAUSS:
        x, w = _gauss_nodes(order) if order > 0 else (np.zeros(1), np.full(1, 2.0))
    else:
        x, w = _gauss_lobatto_nodes(order)

    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])

    lam = _barycentric_weights(x)
    d = _diff_matrix(x, lam)
    vander = legendre.legvander(x, order)
    forward = np.linalg.inv(vander)
    left = _lagrange_row(x, lam, -1.0)
    right = _lagrange_row(x, lam, 1.0)
    weak = (d.T * w[None, :]) / w[:, None]

    _readonly(x, w, d, lam, vander, forward, left, right, weak)
    logger.debug(
        "Built nodal basis", order=order, kind=kind, operation="build_basis"
    )
    return NodalBasis(
        order=order,
        kind=kind,
        nodes=x,
        weights=w,
        diff_matrix=d,
        baryweights=lam,
        modal_forward=forward,
        modal_backward=vander,
        boundary_left=left,
        boundary_right=right,
        weak_diff=weak,
    )


def build_basis(order: int, kind: Union[NodeKind, str] = NodeKind.GAUSS_LOBATTO) -> NodalBasis:
    """Construct (or fetch from cache) the nodal basis of one order.

    Args:
        order (int): Polynomial order P, 0 <= P <= 20.
        kind (Union[NodeKind, str]): Node family. Defaults to Gauss-Lobatto.

    Returns:
        NodalBasis: Immutable basis shared by every caller.

    Raises:
        InvalidOrderError: If P is negative, above the supported maximum, or
            zero for Gauss-Lobatto nodes.
    """
    kind = NodeKind(kind)
    order = int(order)
    if order < 0 or order > MAX_ORDER:
        raise InvalidOrderError(
            f"Polynomial order {order} outside [0, {MAX_ORDER}]", order=order
        )
    if kind is NodeKind.GAUSS_LOBATTO and order < 1:
        raise InvalidOrderError(
            "Gauss-Lobatto nodes require polynomial order >= 1", order=order
        )
    return _build_basis(order, kind)


def _lagrange_row(x: np.ndarray, lam: np.ndarray, t: float) -> np.ndarray:
    delta = t - x
    hit = np.nonzero(np.abs(delta) <= 1e-15)[0]
    if hit.size:
        row = np.zeros_like(x)
        row[hit[0]] = 1.0
        return row
    terms = lam / delta
    return terms / terms.sum()


def interpolation_matrix(basis: NodalBasis, targets: Sequence[float]) -> np.ndarray:
    """Evaluate the Lagrange basis of ``basis`` at ``targets``.

    Args:
        basis (NodalBasis): Source basis.
        targets (Sequence[float]): Points in [-1, 1].

    Returns:
        np.ndarray: Matrix of shape (len(targets), P+1); rows sum to one.

    Raises:
        OutOfRangeError: If any target lies outside [-1, 1] (no extrapolation).
    """
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    if t.size and np.max(np.abs(t)) > 1.0 + RANGE_SLACK:
        bad = t[np.abs(t) > 1.0 + RANGE_SLACK]
        raise OutOfRangeError(
            "Interpolation target outside [-1, 1]", targets=bad.tolist()
        )
    t = np.clip(t, -1.0, 1.0)
    return np.array([_lagrange_row(basis.nodes, basis.baryweights, ti) for ti in t])


def _check_length(basis: NodalBasis, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape[0] != basis.size:
        raise DimensionError(
            f"Expected {basis.size} nodal values, got {values.shape[0]}",
            expected=basis.size,
            received=values.shape[0],
        )
    return values


def apply_diff(basis: NodalBasis, nodal_values: np.ndarray) -> np.ndarray:
    """Differentiate the interpolant of ``nodal_values`` at the nodes."""
    return basis.diff_matrix @ _check_length(basis, nodal_values)


def modal_transform(
    basis: NodalBasis, values: np.ndarray, inverse: bool = False
) -> np.ndarray:
    """Map nodal values to Legendre coefficients (or back with ``inverse``)."""
    values = _check_length(basis, values)
    matrix = basis.modal_backward if inverse else basis.modal_forward
    return matrix @ values


def along_axis(matrix: np.ndarray, values: np.ndarray, axis: int) -> np.ndarray:
    """Apply ``matrix`` along reference axis ``axis`` of (..., n1, n2, n3) data.

    Uses ``np.einsum`` so the summation order never depends on the batch
    size or on BLAS threading.
    """
    position = values.ndim - 3 + axis
    moved = np.moveaxis(values, position, -1)
    return np.moveaxis(np.einsum("ij,...j->...i", matrix, moved), -1, position)
