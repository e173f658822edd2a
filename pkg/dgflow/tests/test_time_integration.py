import numpy as np
import pytest

from dgflow.core.exceptions import AdmissibilityError, ParameterError, StageError
from dgflow.core.physics import GasProperties
from dgflow.core.time_integration import (
    RKScheme,
    compute_dt_cfl,
    low_storage_step,
    rk_step,
    scheme_coefficients,
)


def _forced_decay(u, t):
    return -u + np.cos(t)


def _exact(t):
    # u' = -u + cos t, u(0) = 1
    return 0.5 * (np.sin(t) + np.cos(t)) + 0.5 * np.exp(-t)


def _integrate(scheme, dt, final_time=1.0):
    u = np.array([1.0])
    register = np.zeros_like(u)
    steps = int(round(final_time / dt))
    for n in range(steps):
        low_storage_step(u, n * dt, dt, scheme, _forced_decay, register)
    return abs(u[0] - _exact(final_time))


@pytest.mark.parametrize("scheme", list(RKScheme))
def test_convergence_order(scheme):
    coarse = _integrate(scheme, 0.1)
    fine = _integrate(scheme, 0.05)
    observed = np.log2(coarse / fine)
    assert observed == pytest.approx(scheme_coefficients(scheme).order, abs=0.3)


@pytest.mark.parametrize("scheme", list(RKScheme))
def test_coefficients_are_consistent(scheme):
    coeffs = scheme_coefficients(scheme)
    assert coeffs.stages == len(coeffs.a) == len(coeffs.c)
    assert coeffs.a[0] == 0.0 and coeffs.c[0] == 0.0
    # One step of u' = 1 advances u by dt, up to the rounding of the tabulated coefficients.
    u = np.zeros(1)
    low_storage_step(u, 0.0, 0.3, scheme, lambda v, t: np.ones_like(v))
    assert u[0] == pytest.approx(0.3, abs=1e-10)


def test_stage_times():
    times = []

    def rhs(u, t):
        times.append(t)
        return np.zeros_like(u)

    low_storage_step(np.zeros(2), 1.0, 0.5, "rk3", rhs)
    np.testing.assert_allclose(times, [1.0, 1.0 + 0.5 / 3.0, 1.0 + 0.375])


def test_non_positive_step():
    with pytest.raises(ParameterError):
        low_storage_step(np.zeros(1), 0.0, 0.0, RKScheme.RK3, _forced_decay)
    with pytest.raises(ParameterError):
        low_storage_step(np.zeros(1), 0.0, float("nan"), RKScheme.RK3, _forced_decay)


def test_stage_failure_is_wrapped():
    calls = []

    def rhs(u, t):
        calls.append(t)
        if len(calls) == 2:
            raise AdmissibilityError("Non-positive density or pressure", element=4)
        return -u

    with pytest.raises(StageError) as excinfo:
        low_storage_step(np.ones(3), 0.0, 0.1, RKScheme.RK45, rhs)
    assert excinfo.value.details["stage"] == 1
    assert isinstance(excinfo.value.__cause__, AdmissibilityError)
    assert isinstance(excinfo.value, RuntimeError)


def test_rk_step_advances_field_time(make_disc, uniform_field):
    disc = make_disc(order=2)
    field = uniform_field(disc)
    before = field.data.copy()
    rk_step(field, 0.01, RKScheme.RK45, disc.residual)
    assert field.time == pytest.approx(0.01)
    np.testing.assert_allclose(field.data, before, atol=1e-12)


def test_rk_step_restores_time_on_failure(make_disc, uniform_field):
    disc = make_disc(order=2)
    field = uniform_field(disc)
    field.time = 2.0

    def failing(f):
        raise AdmissibilityError("Non-positive density or pressure")

    with pytest.raises(StageError):
        rk_step(field, 0.1, RKScheme.RK3, failing)
    assert field.time == 2.0


def test_cfl_step_on_affine_mesh(make_disc, uniform_field):
    disc = make_disc(order=3)
    field = uniform_field(disc, velocity=(0.3, -0.2, 0.1))
    c = np.sqrt(1.4)
    # |Ja^a| / J = 2 / h with h = 0.5
    rate = 7 * 4.0 * sum(abs(v) + c for v in (0.3, -0.2, 0.1))
    assert compute_dt_cfl(field, disc, 0.5) == pytest.approx(0.5 / rate, rel=1e-12)
    assert compute_dt_cfl(field, disc, 1.0) == pytest.approx(
        2.0 * compute_dt_cfl(field, disc, 0.5), rel=1e-14
    )


def test_viscous_step_limit(make_disc, uniform_field):
    gas = GasProperties(mu=0.1)
    disc = make_disc(order=3, gas_model=gas)
    field = uniform_field(disc)
    convective = compute_dt_cfl(field, disc, 0.5)
    assert compute_dt_cfl(field, disc, 0.5, dfl=0.0) == convective

    viscous_rate = 0.1 * 3 * 49 * 16.0
    expected = 1.0 / (1.0 / convective + viscous_rate / 0.4)
    assert compute_dt_cfl(field, disc, 0.5, dfl=0.4) == pytest.approx(expected, rel=1e-12)


def test_cfl_parameter_errors(make_disc, uniform_field):
    disc = make_disc(order=1)
    field = uniform_field(disc)
    with pytest.raises(ParameterError):
        compute_dt_cfl(field, disc, 0.0)
    with pytest.raises(ParameterError):
        compute_dt_cfl(field, disc, 0.5, dfl=-1.0)
