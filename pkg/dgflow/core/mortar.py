"""Mortar projections between faces of unequal polynomial order.

The mortar space uses the pointwise maximum of the two face orders. Traces
are interpolated onto the mortar nodes (exact for each side's polynomial
degree) and mortar fluxes are returned to a side by L2 projection under the
mortar quadrature. The side quadrature of the returned flux equals the mortar
integral, which keeps conservation exact, and returning a projected side
trace gives the trace back unchanged.
"""

import functools
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from .basis import NodeKind, build_basis, interpolation_matrix

FaceOrders = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class Mortar:
    """Projection operators of one face pairing.

    Attributes:
        left_orders (FaceOrders): Face orders of the left side.
        right_orders (FaceOrders): Face orders of the right side, in the left frame.
        mortar_orders (FaceOrders): Pointwise maximum of both.
        to_mortar (Tuple): Per side, per face axis interpolation matrices.
        from_mortar (Tuple): Per side, per face axis back-projection matrices.
        weights (np.ndarray): Tensor mortar quadrature weights.
    """

    left_orders: FaceOrders
    right_orders: FaceOrders
    mortar_orders: FaceOrders
    to_mortar: Tuple[Tuple[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
    from_mortar: Tuple[Tuple[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
    weights: np.ndarray

    @property
    def conforming(self) -> bool:
        return self.left_orders == self.right_orders

    def project(self, side: int, values: np.ndarray) -> np.ndarray:
        """Interpolate (..., na, nb) face data of ``side`` onto the mortar."""
        if self.conforming:
            return values
        a, b = self.to_mortar[side]
        return np.einsum("...pq,ip,jq->...ij", values, a, b)

    def back(self, side: int, values: np.ndarray) -> np.ndarray:
        """Return (..., ma, mb) mortar data to the face nodes of ``side``."""
        if self.conforming:
            return values
        a, b = self.from_mortar[side]
        return np.einsum("...pq,ip,jq->...ij", values, a, b)


def _axis_operators(side_order: int, mortar_order: int, kind: NodeKind):
    side = build_basis(side_order, kind)
    mortar = build_basis(mortar_order, kind)
    interp = interpolation_matrix(side, mortar.nodes)
    weighted = interp.T * mortar.weights[None, :]
    # Side mass matrix under the mortar quadrature; its rows sum to the side weights.
    mass = weighted @ interp
    back = linalg.solve(mass, weighted, assume_a="pos")
    return interp, back


@functools.lru_cache(maxsize=None)
def _build_mortar(left: FaceOrders, right: FaceOrders, kind: NodeKind) -> Mortar:
    mortar_orders = (max(left[0], right[0]), max(left[1], right[1]))
    to_mortar = []
    from_mortar = []
    for orders in (left, right):
        ops = [_axis_operators(orders[k], mortar_orders[k], kind) for k in range(2)]
        to_mortar.append((ops[0][0], ops[1][0]))
        from_mortar.append((ops[0][1], ops[1][1]))
    w = [build_basis(p, kind).weights for p in mortar_orders]
    return Mortar(
        left_orders=left,
        right_orders=right,
        mortar_orders=mortar_orders,
        to_mortar=tuple(to_mortar),
        from_mortar=tuple(from_mortar),
        weights=np.outer(w[0], w[1]),
    )


def build_mortar(
    left_orders: FaceOrders,
    right_orders: FaceOrders,
    kind: NodeKind | str = NodeKind.GAUSS_LOBATTO,
) -> Mortar:
    """Build (or fetch) the mortar coupling two face order pairs.

    Args:
        left_orders (FaceOrders): Orders along the two face axes, left side.
        right_orders (FaceOrders): Same for the right side, already in the left frame.
        kind (NodeKind | str): Node family of both sides.

    Returns:
        Mortar: Immutable projection operators.
    """
    return _build_mortar(
        tuple(int(p) for p in left_orders),
        tuple(int(p) for p in right_orders),
        NodeKind(kind),
    )
