"""Per-element order bookkeeping and the solution container.

``SolutionField`` stores every element's nodal values in one flat float64
buffer. Elements sharing an order triple are laid out contiguously so the
spatial operator can work on a whole group with a single batched array
view, while the time integrator updates the flat buffer in place.
"""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .basis import MAX_ORDER
from .exceptions import AdmissibilityError, DimensionError, InvalidOrderError

OrderTriple = Tuple[int, int, int]
NVAR = 5


@dataclass(frozen=True)
class OrderMap:
    """Anisotropic polynomial orders of every element.

    Attributes:
        orders (Tuple[OrderTriple, ...]): (Px, Py, Pz) per element.
        p_min (int): Lowest admissible order.
        p_max (int): Highest admissible order.
    """

    orders: Tuple[OrderTriple, ...]
    p_min: int = 1
    p_max: int = MAX_ORDER

    def __post_init__(self):
        if not 0 <= self.p_min <= self.p_max <= MAX_ORDER:
            raise InvalidOrderError(
                f"Invalid order bounds [{self.p_min}, {self.p_max}]",
                p_min=self.p_min,
                p_max=self.p_max,
            )
        normalized = tuple(tuple(int(p) for p in triple) for triple in self.orders)
        for e, triple in enumerate(normalized):
            if len(triple) != 3:
                raise DimensionError(
                    f"Element {e} needs three orders, got {len(triple)}", element=e
                )
            if min(triple) < self.p_min or max(triple) > self.p_max:
                raise InvalidOrderError(
                    f"Element {e} orders {triple} outside [{self.p_min}, {self.p_max}]",
                    element=e,
                    orders=triple,
                )
        object.__setattr__(self, "orders", normalized)

    @classmethod
    def uniform(
        cls,
        n_elements: int,
        order: Sequence[int] | int,
        p_min: int = 1,
        p_max: int = MAX_ORDER,
    ) -> "OrderMap":
        triple = (order,) * 3 if isinstance(order, int) else tuple(order)
        return cls(tuple([triple] * n_elements), p_min=p_min, p_max=p_max)

    def __len__(self) -> int:
        return len(self.orders)

    def __getitem__(self, element: int) -> OrderTriple:
        return self.orders[element]

    def __iter__(self) -> Iterator[OrderTriple]:
        return iter(self.orders)

    def replace(self, orders: Sequence[Sequence[int]]) -> "OrderMap":
        return OrderMap(tuple(tuple(o) for o in orders), self.p_min, self.p_max)

    def groups(self) -> Dict[OrderTriple, np.ndarray]:
        """Element ids per order triple, keys and ids both ascending."""
        result: Dict[OrderTriple, List[int]] = {}
        for e, triple in enumerate(self.orders):
            result.setdefault(triple, []).append(e)
        return {k: np.asarray(result[k], dtype=np.int64) for k in sorted(result)}


class SolutionField:
    """Nodal values of every element plus the simulation time.

    Attributes:
        orders (OrderMap): Orders the arrays are shaped after.
        nvar (int): Variables per node (5 conservative variables by default).
        data (np.ndarray): Flat storage; group blocks and element arrays are views.
        time (float): Simulation time.
    """

    def __init__(
        self,
        orders: OrderMap,
        data: Optional[np.ndarray] = None,
        time: float = 0.0,
        nvar: int = NVAR,
    ):
        self.orders = orders
        self.nvar = nvar
        self.time = float(time)

        self._groups = orders.groups()
        self._offsets: Dict[OrderTriple, int] = {}
        self._locate: List[Tuple[OrderTriple, int]] = [((0, 0, 0), 0)] * len(orders)
        offset = 0
        for key, elements in self._groups.items():
            self._offsets[key] = offset
            for local, e in enumerate(elements):
                self._locate[e] = (key, local)
            offset += len(elements) * self.nodes_per_element(key)
        size = offset

        if data is None:
            self.data = np.zeros(size)
        else:
            data = np.asarray(data, dtype=float)
            if data.shape != (size,):
                raise DimensionError(
                    f"Flat data has shape {data.shape}, layout needs ({size},)",
                    expected=size,
                )
            self.data = data

    def nodes_per_element(self, key: OrderTriple) -> int:
        return self.nvar * (key[0] + 1) * (key[1] + 1) * (key[2] + 1)

    @property
    def groups(self) -> Dict[OrderTriple, np.ndarray]:
        return self._groups

    def block(self, key: OrderTriple) -> np.ndarray:
        """View of one order group, shape (E_g, nvar, Px+1, Py+1, Pz+1)."""
        count = len(self._groups[key])
        start = self._offsets[key]
        stop = start + count * self.nodes_per_element(key)
        shape = (count, self.nvar, key[0] + 1, key[1] + 1, key[2] + 1)
        return self.data[start:stop].reshape(shape)

    def element(self, e: int) -> np.ndarray:
        """View of one element, shape (nvar, Px+1, Py+1, Pz+1)."""
        key, local = self._locate[e]
        return self.block(key)[local]

    def locate(self, e: int) -> Tuple[OrderTriple, int]:
        return self._locate[e]

    def copy(self) -> "SolutionField":
        return SolutionField(self.orders, self.data.copy(), self.time, self.nvar)

    def zeros_like(self) -> "SolutionField":
        return SolutionField(self.orders, None, self.time, self.nvar)

    def set_element(self, e: int, values: np.ndarray) -> None:
        self.element(e)[...] = values

    def check_admissible(self, gamma: float) -> None:
        """Raise on the first node with non-positive density or pressure.

        Raises:
            AdmissibilityError: Carrying element id, node index and the state.
        """
        for key, elements in self._groups.items():
            block = self.block(key)
            rho = block[:, 0]
            kinetic = 0.5 * np.sum(block[:, 1:4] ** 2, axis=1) / np.where(
                rho > 0, rho, 1.0
            )
            p = (gamma - 1.0) * (block[:, 4] - kinetic)
            bad = (rho <= 0) | (p <= 0) | ~np.isfinite(p)
            if np.any(bad):
                local, i, j, k = (int(v) for v in np.argwhere(bad)[0])
                e = int(elements[local])
                raise AdmissibilityError(
                    f"Inadmissible state in element {e} at node {(i, j, k)}",
                    element=e,
                    node=(i, j, k),
                    state=block[local, :, i, j, k].tolist(),
                )
