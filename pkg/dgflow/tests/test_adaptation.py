import numpy as np
import pytest
from pydantic import ValidationError

from dgflow.core.adaptation import (
    AdaptationConfig,
    AdaptationMode,
    TauEstimate,
    adapt,
    candidate_orders,
    feature_orders,
    project_solution,
    select_orders,
    tau_estimate,
    transfer_matrix,
)
from dgflow.core.basis import NodeKind
from dgflow.core.exceptions import ConfigurationError, InvalidOrderError
from dgflow.core.field import OrderMap


@pytest.mark.parametrize("kind", [NodeKind.GAUSS, NodeKind.GAUSS_LOBATTO])
def test_raise_then_lower_is_identity(make_disc, smooth_field, kind):
    disc = make_disc(order=2, kind=kind)
    field = smooth_field(disc)
    raised = project_solution(field, OrderMap.uniform(8, 4), kind)
    lowered = project_solution(raised, disc.orders, kind)
    np.testing.assert_allclose(lowered.data, field.data, atol=1e-12)
    assert lowered.time == field.time


def test_transfer_matrix_shapes():
    up = transfer_matrix(2, 5, NodeKind.GAUSS_LOBATTO)
    down = transfer_matrix(5, 2, NodeKind.GAUSS_LOBATTO)
    assert up.shape == (6, 3)
    assert down.shape == (3, 6)
    np.testing.assert_allclose(down @ up, np.eye(3), atol=1e-12)
    with pytest.raises(ValueError):
        up[0, 0] = 1.0


def test_lowering_preserves_integrals(make_disc, smooth_field):
    disc = make_disc(order=4)
    field = smooth_field(disc)
    target = OrderMap(((2, 2, 2), (1, 3, 2)) * 4)
    lowered = project_solution(field, target)
    before = disc.element_integrals(field)
    after = disc.with_orders(target).element_integrals(lowered)
    np.testing.assert_allclose(after, before, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("kind", [NodeKind.GAUSS, NodeKind.GAUSS_LOBATTO])
@pytest.mark.parametrize("target_orders", [(3, 3, 3), (2, 4, 1)])
def test_lowering_preserves_integrals_on_curved_mesh(make_disc, smooth_field, kind, target_orders):
    disc = make_disc(order=4, amplitude=0.1, kind=kind)
    field = smooth_field(disc)
    target = OrderMap.uniform(8, target_orders)
    coarse = disc.with_orders(target)
    lowered = project_solution(field, target, kind, source=disc, target=coarse)
    before = disc.element_integrals(field)
    after = coarse.element_integrals(lowered)
    np.testing.assert_allclose(after, before, rtol=1e-11, atol=1e-13)


def test_curved_lowering_keeps_constant_states(make_disc, uniform_field):
    disc = make_disc(order=4, amplitude=0.1)
    field = uniform_field(disc)
    target = OrderMap(((2, 2, 2), (1, 3, 2)) * 4)
    lowered = project_solution(field, target, source=disc, target=disc.with_orders(target))
    for e in range(8):
        np.testing.assert_allclose(
            lowered.element(e), field.element(0)[:, :1, :1, :1] * np.ones_like(lowered.element(e)),
            rtol=1e-12,
        )


def test_adapt_conserves_on_curved_mesh(make_disc, smooth_field):
    disc = make_disc(order=4, amplitude=0.1)
    field = smooth_field(disc)
    config = AdaptationConfig(
        mode="feature", p_min=2, p_max=4, sensor_low=1e3, sensor_high=1e4
    )
    result = adapt(field, disc, AdaptationMode.FEATURE, config)
    assert set(result.orders) == {(2, 2, 2)}
    np.testing.assert_allclose(
        np.sum(result.discretization.element_integrals(result.field), axis=1),
        np.sum(disc.element_integrals(field), axis=1),
        rtol=1e-11,
    )


def test_conservative_transfer_needs_matching_operators(make_disc, smooth_field):
    disc = make_disc(order=3)
    field = smooth_field(disc)
    target = OrderMap.uniform(8, 2)
    with pytest.raises(InvalidOrderError):
        project_solution(field, target, source=disc)
    with pytest.raises(InvalidOrderError):
        project_solution(field, target, source=disc, target=disc)


def test_projection_rejects_other_mesh(make_disc, uniform_field):
    field = uniform_field(make_disc(order=2))
    with pytest.raises(InvalidOrderError):
        project_solution(field, OrderMap.uniform(4, 2))


def test_candidate_orders():
    assert candidate_orders((3, 2, 2), 1) == [
        (1, 1, 1),
        (1, 2, 2),
        (2, 2, 2),
        (3, 1, 2),
        (3, 2, 1),
    ]
    assert candidate_orders((2, 2, 2), 2) == []
    assert candidate_orders((1, 1, 1), 1) == []


def test_tau_estimate_rejects_higher_candidates(make_disc, uniform_field):
    disc = make_disc(order=2)
    field = uniform_field(disc)
    candidates = [[(1, 1, 1)]] * 7 + [[(1, 3, 1)]]
    with pytest.raises(InvalidOrderError) as excinfo:
        tau_estimate(field, disc, candidates)
    assert excinfo.value.details["element"] == 7
    with pytest.raises(ConfigurationError):
        tau_estimate(field, disc, [[]] * 8)


def test_tau_estimate_decreases_with_order(make_disc, smooth_field):
    disc = make_disc(order=5)
    field = smooth_field(disc)
    tau = tau_estimate(field, disc, [[(2, 2, 2), (4, 4, 4)]] * 8)
    assert len(tau) == 8
    for e in range(8):
        estimate = tau.for_element(e)
        assert estimate[(2, 2, 2)] > estimate[(4, 4, 4)] > 0.0


def test_tau_estimate_vanishes_for_uniform_state(make_disc, uniform_field):
    disc = make_disc(order=3)
    tau = tau_estimate(uniform_field(disc), disc)
    assert all(np.all(v < 1e-10) for v in tau.values)


def test_select_orders():
    current = OrderMap(((3, 3, 3), (3, 3, 3), (1, 1, 1)), p_min=1, p_max=6)
    tau = TauEstimate(
        candidates=(((1, 1, 1), (2, 2, 2)), ((1, 1, 1), (2, 2, 2)), ()),
        values=(np.array([1e-1, 1e-2]), np.array([1e-3, 1e-5]), np.zeros(0)),
    )
    selected = select_orders(tau, 1e-4, current)
    # log10 tau = -p crosses -4 at p = 4
    assert selected[0] == (4, 4, 4)
    assert selected[1] == (2, 2, 2)
    assert selected[2] == (1, 1, 1)
    assert selected.p_max == 6

    # Extrapolation is clamped to the maximum order.
    assert select_orders(tau, 1e-9, current)[0] == (6, 6, 6)
    with pytest.raises(ConfigurationError):
        select_orders(tau, 0.0, current)


def test_select_orders_without_decay_uses_maximum():
    current = OrderMap(((3, 3, 3),), p_max=5)
    tau = TauEstimate(candidates=(((1, 1, 1), (2, 2, 2)),), values=(np.array([1e-2, 1e-2]),))
    assert select_orders(tau, 1e-4, current)[0] == (5, 5, 5)


def test_feature_orders():
    config = AdaptationConfig(
        mode="feature", p_min=1, p_max=5, sensor_low=1e-3, sensor_high=10.0
    )
    orders = feature_orders(np.array([1e-4, 1e-1, 1e2]), config, OrderMap.uniform(3, 2))
    assert list(orders) == [(1, 1, 1), (3, 3, 3), (5, 5, 5)]


@pytest.mark.parametrize("mode", list(AdaptationMode))
def test_adapt_uniform_state_goes_to_minimum(make_disc, uniform_field, mode):
    disc = make_disc(order=3)
    config = AdaptationConfig(mode=mode, p_min=1, p_max=4)
    result = adapt(uniform_field(disc), disc, mode, config)
    assert set(result.orders) == {(1, 1, 1)}
    assert list(result.discretization.groups) == [(1, 1, 1)]
    np.testing.assert_allclose(result.field.block((1, 1, 1))[:, 0], 1.0, rtol=1e-13)


def test_adapt_keeps_elements_at_minimum(make_disc, uniform_field):
    disc = make_disc(order=1)
    field = uniform_field(disc)
    result = adapt(field, disc, AdaptationMode.TAU, AdaptationConfig(mode="tau", p_min=1))
    assert result.field is field
    assert result.discretization is disc


def test_adaptation_config_validation():
    with pytest.raises(ValidationError, match="exceeds maximum order"):
        AdaptationConfig(p_min=4, p_max=3)
    with pytest.raises(ValidationError, match="sensor low must be below"):
        AdaptationConfig(sensor_low=1.0, sensor_high=0.5)
    with pytest.raises(ValidationError):
        AdaptationConfig(threshold=0.0)
    assert AdaptationConfig().mode is None
