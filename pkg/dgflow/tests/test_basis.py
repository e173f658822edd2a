import numpy as np
import pytest

from dgflow.core.basis import (
    MAX_ORDER,
    NodeKind,
    along_axis,
    apply_diff,
    build_basis,
    interpolation_matrix,
    modal_transform,
)
from dgflow.core.exceptions import DimensionError, InvalidOrderError, OutOfRangeError

KINDS = [NodeKind.GAUSS, NodeKind.GAUSS_LOBATTO]
ORDERS = [1, 2, 3, 5, 8, 12, 16, 20]


def _tol(order: int) -> float:
    return 1e-12 if order <= 10 else 1e-10


def test_lowest_order_gauss():
    basis = build_basis(0, NodeKind.GAUSS)
    np.testing.assert_allclose(basis.nodes, [0.0])
    np.testing.assert_allclose(basis.weights, [2.0])
    np.testing.assert_allclose(basis.diff_matrix, [[0.0]])


def test_known_nodes_and_weights():
    gauss = build_basis(1, NodeKind.GAUSS)
    np.testing.assert_allclose(gauss.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(gauss.weights, [1.0, 1.0], atol=1e-15)

    lobatto = build_basis(2, NodeKind.GAUSS_LOBATTO)
    np.testing.assert_allclose(lobatto.nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(lobatto.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-15)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("order", ORDERS)
def test_nodes_weights_invariants(order, kind):
    basis = build_basis(order, kind)

    assert basis.size == order + 1
    assert np.all(np.diff(basis.nodes) > 0)
    assert np.all(basis.weights > 0)
    assert abs(basis.weights.sum() - 2.0) < 1e-13
    np.testing.assert_array_equal(basis.nodes, -basis.nodes[::-1])
    np.testing.assert_array_equal(basis.weights, basis.weights[::-1])
    if kind is NodeKind.GAUSS_LOBATTO:
        assert basis.nodes[0] == -1.0 and basis.nodes[-1] == 1.0
    else:
        assert np.all(np.abs(basis.nodes) < 1.0)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("order", [1, 2, 4, 7, 10])
def test_quadrature_exactness(order, kind):
    basis = build_basis(order, kind)
    exact_degree = 2 * order + 1 if kind is NodeKind.GAUSS else 2 * order - 1
    for k in range(exact_degree + 1):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert basis.weights @ basis.nodes**k == pytest.approx(exact, abs=1e-13)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("order", ORDERS)
def test_differentiation_is_exact_for_polynomials(order, kind):
    basis = build_basis(order, kind)
    x = basis.nodes
    scale = max(1.0, order**2)
    for k in range(order + 1):
        derivative = k * x ** (k - 1) if k else np.zeros_like(x)
        np.testing.assert_allclose(
            basis.diff_matrix @ x**k, derivative, atol=_tol(order) * scale
        )


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("order", ORDERS)
def test_modal_transform_inverts(order, kind):
    basis = build_basis(order, kind)
    identity = basis.modal_backward @ basis.modal_forward
    np.testing.assert_allclose(identity, np.eye(order + 1), atol=_tol(order))


@pytest.mark.parametrize("order", ORDERS)
def test_lobatto_summation_by_parts(order):
    basis = build_basis(order, NodeKind.GAUSS_LOBATTO)
    q = np.diag(basis.weights) @ basis.diff_matrix
    b = np.zeros((order + 1, order + 1))
    b[0, 0], b[-1, -1] = -1.0, 1.0
    np.testing.assert_allclose(q + q.T, b, atol=_tol(order) * max(1.0, order))


@pytest.mark.parametrize("kind", KINDS)
def test_boundary_rows(kind):
    basis = build_basis(4, kind)
    for side, point in ((0, -1.0), (1, 1.0)):
        row = basis.boundary(side)
        assert row.sum() == pytest.approx(1.0, abs=1e-14)
        assert row @ basis.nodes**3 == pytest.approx(point**3, abs=1e-13)


def test_bases_are_cached_and_readonly():
    basis = build_basis(3, "gauss-lobatto")
    assert basis is build_basis(3, NodeKind.GAUSS_LOBATTO)
    with pytest.raises(ValueError):
        basis.nodes[0] = 0.0


@pytest.mark.parametrize(
    "order,kind",
    [(-1, NodeKind.GAUSS), (MAX_ORDER + 1, NodeKind.GAUSS), (0, NodeKind.GAUSS_LOBATTO)],
)
def test_invalid_orders(order, kind):
    with pytest.raises(InvalidOrderError):
        build_basis(order, kind)


def test_interpolation_matrix():
    basis = build_basis(5, NodeKind.GAUSS)

    np.testing.assert_allclose(
        interpolation_matrix(basis, basis.nodes), np.eye(6), atol=1e-14
    )

    targets = np.linspace(-1.0, 1.0, 11)
    matrix = interpolation_matrix(basis, targets)
    assert matrix.shape == (11, 6)
    np.testing.assert_allclose(matrix.sum(axis=1), 1.0, atol=1e-13)
    values = 1.0 + basis.nodes - 2.0 * basis.nodes**5
    np.testing.assert_allclose(matrix @ values, 1.0 + targets - 2.0 * targets**5, atol=1e-12)


def test_interpolation_rejects_extrapolation():
    basis = build_basis(3)
    with pytest.raises(OutOfRangeError):
        interpolation_matrix(basis, [0.0, 1.01])
    # Round-off overshoot is accepted
    assert interpolation_matrix(basis, [1.0 + 1e-15]).shape == (1, 4)


def test_length_checks():
    basis = build_basis(3)
    with pytest.raises(DimensionError):
        apply_diff(basis, np.zeros(5))
    with pytest.raises(DimensionError):
        modal_transform(basis, np.zeros(3))


def test_modal_transform_of_legendre_polynomial():
    basis = build_basis(4, NodeKind.GAUSS)
    x = basis.nodes
    p2 = 0.5 * (3 * x**2 - 1)
    np.testing.assert_allclose(modal_transform(basis, p2), [0, 0, 1, 0, 0], atol=1e-13)
    np.testing.assert_allclose(
        modal_transform(basis, modal_transform(basis, p2), inverse=True), p2, atol=1e-13
    )


def test_along_axis_matches_per_axis_product():
    rng = np.random.default_rng(3)
    values = rng.standard_normal((5, 2, 3, 4, 5))
    matrix = rng.standard_normal((4, 4))
    result = along_axis(matrix, values, 1)
    expected = np.einsum("ab,...ibk->...iak", matrix, values)
    np.testing.assert_allclose(result, expected, atol=1e-13)
