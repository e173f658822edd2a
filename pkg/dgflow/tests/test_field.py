import numpy as np
import pytest

from dgflow.core.exceptions import AdmissibilityError, DimensionError, InvalidOrderError
from dgflow.core.field import OrderMap, SolutionField


@pytest.fixture
def mixed_orders() -> OrderMap:
    return OrderMap(((2, 2, 2), (1, 2, 3), (2, 2, 2), (1, 2, 3), (3, 3, 3)))


def test_order_map_groups(mixed_orders):
    groups = mixed_orders.groups()
    assert list(groups) == [(1, 2, 3), (2, 2, 2), (3, 3, 3)]
    assert groups[(2, 2, 2)].tolist() == [0, 2]
    assert groups[(1, 2, 3)].tolist() == [1, 3]
    assert len(mixed_orders) == 5
    assert mixed_orders[4] == (3, 3, 3)


def test_order_map_validation():
    with pytest.raises(InvalidOrderError):
        OrderMap(((0, 1, 1),))
    with pytest.raises(InvalidOrderError):
        OrderMap(((4, 4, 4),), p_max=3)
    with pytest.raises(InvalidOrderError):
        OrderMap((), p_min=3, p_max=2)
    with pytest.raises(DimensionError):
        OrderMap(((1, 1),))


def test_order_map_replace_keeps_bounds():
    orders = OrderMap.uniform(3, 2, p_min=1, p_max=4)
    replaced = orders.replace([(1, 1, 1), (4, 4, 4), (2, 3, 4)])
    assert replaced.p_max == 4
    with pytest.raises(InvalidOrderError):
        orders.replace([(5, 1, 1)] * 3)


def test_field_layout(mixed_orders):
    field = SolutionField(mixed_orders, time=0.5)
    assert field.data.size == 5 * (27 * 2 + 2 * 3 * 4 * 2 + 64)
    assert field.block((1, 2, 3)).shape == (2, 5, 2, 3, 4)
    assert field.element(3).shape == (5, 2, 3, 4)
    assert field.locate(3) == ((1, 2, 3), 1)

    field.set_element(2, np.full((5, 3, 3, 3), 7.0))
    # Element and block access are views of the same storage.
    assert np.all(field.block((2, 2, 2))[1] == 7.0)
    assert field.data.sum() == 7.0 * 5 * 27

    copy = field.copy()
    copy.data[:] = 0.0
    assert field.data.sum() == 7.0 * 5 * 27
    assert copy.time == 0.5
    assert field.zeros_like().data.sum() == 0.0


def test_field_rejects_wrong_data_size(mixed_orders):
    with pytest.raises(DimensionError):
        SolutionField(mixed_orders, data=np.zeros(10))


def test_field_admissibility(mixed_orders):
    field = SolutionField(mixed_orders)
    for key in field.groups:
        field.block(key)[:, 0] = 1.0
        field.block(key)[:, 4] = 2.5
    field.check_admissible(1.4)

    field.element(3)[4, 1, 2, 0] = 0.0
    with pytest.raises(AdmissibilityError) as excinfo:
        field.check_admissible(1.4)
    assert excinfo.value.details["element"] == 3
    assert excinfo.value.details["node"] == (1, 2, 0)
