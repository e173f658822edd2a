import numpy as np
import pytest

from dgflow.core.adaptation import AdaptationConfig
from dgflow.core.config import NumericsConfig, OutputConfig, RunConfig, TimeConfig
from dgflow.core.exceptions import AdmissibilityError, ParameterError
from dgflow.core.initial_conditions import InitialConditionConfig, initial_condition
from dgflow.core.mesh import MeshSpec
from dgflow.core.monitors import ProbeConfig
from dgflow.core.output import read_restart, write_restart
from dgflow.core.physics import GasProperties
from dgflow.core.solver import (
    CRASH_FILE,
    RESTART_FILE,
    THREADS_ENV,
    build_discretization,
    resolve_threads,
    run,
)


def _config(tmp_path, *, order=2, final_time=None, max_iterations=None, **kwargs) -> RunConfig:
    fields = dict(
        mesh=MeshSpec(elements=(2, 2, 2)),
        numerics=NumericsConfig(orders=(order,) * 3),
        output=OutputConfig(directory=str(tmp_path / "out")),
        initial_condition=InitialConditionConfig(velocity=(0.3, -0.2, 0.1)),
    )
    fields.update(kwargs)
    if "time" not in fields:
        fields["time"] = TimeConfig(final_time=final_time, max_iterations=max_iterations)
    return RunConfig(**fields)


def _vortex_config(tmp_path, **kwargs) -> RunConfig:
    kwargs.setdefault("mesh", MeshSpec(elements=(2, 2, 1), upper=(10.0, 10.0, 5.0)))
    kwargs.setdefault("gas", GasProperties(mu=1e-3))
    kwargs.setdefault(
        "initial_condition",
        InitialConditionConfig(
            name="isentropic-vortex", velocity=(1.0, 0.5, 0.0), vortex_strength=1.0
        ),
    )
    return _config(tmp_path, **kwargs)


def test_resolve_threads(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_threads() == 1
    assert resolve_threads(3) == 3
    monkeypatch.setenv(THREADS_ENV, "4")
    assert resolve_threads() == 4
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ParameterError, match="must be an integer"):
        resolve_threads()
    with pytest.raises(ParameterError):
        resolve_threads(0)


def test_build_discretization(tmp_path):
    disc = build_discretization(_config(tmp_path, order=3, max_iterations=1), threads=2)
    assert disc.mesh.n_elements == 8
    assert list(disc.groups) == [(3, 3, 3)]


def test_run_to_final_time(tmp_path):
    config = _config(tmp_path, final_time=0.05)
    report = run(config)
    out = tmp_path / "out"

    assert report.time == pytest.approx(0.05, abs=1e-15)
    assert report.steps == report.step > 1
    assert report.output_dir == out
    assert report.dofs == 8 * 27 * 5
    assert report.final.max_residual < 1e-11
    assert [p.name for p in report.snapshots] == [
        "snapshot_000000.dat",
        f"snapshot_{report.step:06d}.dat",
    ]
    assert (out / RESTART_FILE).exists()
    rows = (out / "monitors.csv").read_text().splitlines()
    assert len(rows) == 1 + report.step + 1
    assert float(rows[-1].split(",")[0]) == pytest.approx(0.05)

    field, step, _ = read_restart(out / RESTART_FILE)
    assert step == report.step
    assert field.time == report.time


def test_fixed_step_and_snapshot_interval(tmp_path):
    config = _config(
        tmp_path,
        time=TimeConfig(dt=0.01, max_iterations=4),
        output=OutputConfig(directory=str(tmp_path / "out"), interval=2, monitor_interval=3, format="vtk"),
    )
    report = run(config)
    assert report.time == pytest.approx(0.04)
    assert [p.name for p in report.snapshots] == [
        "snapshot_000000.vtk",
        "snapshot_000002.vtk",
        "snapshot_000004.vtk",
    ]
    steps = [int(r.split(",")[1]) for r in (tmp_path / "out" / "monitors.csv").read_text().splitlines()[1:]]
    assert steps == [0, 3, 4]


def test_output_dir_override_and_probes(tmp_path):
    config = _config(
        tmp_path,
        max_iterations=2,
        probes=[ProbeConfig(name="centre", position=(0.5, 0.5, 0.5))],
    )
    report = run(config, output_dir=tmp_path / "elsewhere")
    header = (tmp_path / "elsewhere" / "monitors.csv").read_text().splitlines()[0]
    assert header.endswith(",centre_rho,centre_p")
    assert report.final.probes["centre"] == pytest.approx((1.0, 1.0))
    assert not (tmp_path / "out").exists()


def test_restart_is_bit_exact(tmp_path):
    continuous = run(_vortex_config(tmp_path, max_iterations=6), output_dir=tmp_path / "a")

    run(_vortex_config(tmp_path, max_iterations=3), output_dir=tmp_path / "b")
    resumed = run(
        _vortex_config(tmp_path, max_iterations=6),
        output_dir=tmp_path / "c",
        restart=tmp_path / "b" / RESTART_FILE,
    )

    assert resumed.steps == 3
    assert resumed.step == continuous.step == 6
    assert resumed.time == continuous.time
    assert (tmp_path / "c" / RESTART_FILE).read_bytes() == (tmp_path / "a" / RESTART_FILE).read_bytes()


def test_restart_mesh_mismatch(tmp_path):
    run(_config(tmp_path, max_iterations=1), output_dir=tmp_path / "small")
    bigger = _config(tmp_path, max_iterations=2, mesh=MeshSpec(elements=(3, 2, 2)))
    with pytest.raises(ParameterError, match="Restart file has 8 elements, mesh has 12"):
        run(bigger, restart=tmp_path / "small" / RESTART_FILE)


def test_results_do_not_depend_on_threads(tmp_path):
    for threads in (1, 3):
        run(_vortex_config(tmp_path, max_iterations=3), threads=threads, output_dir=tmp_path / str(threads))
    assert (tmp_path / "1" / RESTART_FILE).read_bytes() == (tmp_path / "3" / RESTART_FILE).read_bytes()


def test_crash_dumps_partial_state(tmp_path, monkeypatch):
    def corrupting_step(field, dt, scheme, residual, register=None):
        field.element(2)[0, 1, 1, 1] = -0.5
        field.time += dt
        return field

    monkeypatch.setattr("dgflow.core.solver.rk_step", corrupting_step)
    with pytest.raises(AdmissibilityError) as excinfo:
        run(_config(tmp_path, max_iterations=5))
    assert excinfo.value.details["element"] == 2

    out = tmp_path / "out"
    field, step, _ = read_restart(out / CRASH_FILE)
    assert step == 1
    assert field.element(2)[0, 1, 1, 1] == -0.5
    assert field.time > 0.0
    assert not (out / RESTART_FILE).exists()
    assert (out / "monitors.csv").exists()


def test_feature_adaptation_at_start(tmp_path):
    config = _config(
        tmp_path,
        order=3,
        max_iterations=2,
        adaptation=AdaptationConfig(mode="feature", interval=0, p_min=1, p_max=3),
    )
    report = run(config)
    assert report.adaptations == 1
    assert report.dofs == 8 * 8 * 5
    field = read_restart(tmp_path / "out" / RESTART_FILE).field
    assert set(field.orders) == {(1, 1, 1)}


def test_tau_adaptation_on_interval(tmp_path):
    config = _config(
        tmp_path,
        order=3,
        max_iterations=3,
        adaptation=AdaptationConfig(mode="tau", interval=2, p_min=1, p_max=4),
    )
    report = run(config)
    assert report.adaptations == 1
    assert report.dofs == 8 * 8 * 5
    np.testing.assert_allclose(report.final.min_density, 1.0, rtol=1e-12)



@pytest.mark.parametrize("settled,adaptations", [(False, 1), (True, 0)])
def test_restart_remembers_one_shot_tau_adaptation(tmp_path, settled, adaptations):
    config = _config(
        tmp_path,
        order=3,
        max_iterations=2,
        adaptation=AdaptationConfig(mode="tau", interval=0, p_min=1, p_max=4),
    )
    start = initial_condition(config.initial_condition, build_discretization(config))
    restart = write_restart(start, 0, tmp_path / "start.dgsm", settled=settled)

    report = run(config, restart=restart)
    assert report.adaptations == adaptations
    final = read_restart(tmp_path / "out" / RESTART_FILE)
    assert final.settled
    assert len(set(final.field.orders)) == 1
    assert (final.field.orders[0] == (3, 3, 3)) is settled


RESOLVED_VORTEX_MESH = MeshSpec(elements=(8, 8, 1), upper=(10.0, 10.0, 1.25))


def _decay_rate(orders, errors) -> float:
    """Fitted slope of log10(error) against the polynomial order."""
    return float(np.polyfit(orders, np.log10(errors), 1)[0])


def _l2_norm(disc, field, variables=slice(None)) -> float:
    return float(np.sqrt(np.sum(disc.element_integrals(field, lambda u: u[variables] ** 2))))


def test_steady_vortex_truncation_error_decays(tmp_path):
    orders = (2, 3, 4)
    errors = []
    for order in orders:
        config = _vortex_config(
            tmp_path,
            order=order,
            max_iterations=1,
            mesh=RESOLVED_VORTEX_MESH,
            gas=GasProperties(),
            initial_condition=InitialConditionConfig(
                name="isentropic-vortex", velocity=(0.0, 0.0, 0.0), vortex_strength=1.0
            ),
        )
        disc = build_discretization(config)
        steady = initial_condition(config.initial_condition, disc)
        errors.append(_l2_norm(disc, disc.residual(steady)))
    assert errors[0] > errors[1] > errors[2]
    assert _decay_rate(orders, errors) < -0.25


@pytest.mark.slow
def test_vortex_advection_converges(tmp_path):
    orders = (2, 3, 4)
    errors = []
    for order in orders:
        config = _vortex_config(
            tmp_path,
            order=order,
            mesh=RESOLVED_VORTEX_MESH,
            gas=GasProperties(),
            time=TimeConfig(cfl=0.3, final_time=0.5),
        )
        report = run(config, output_dir=tmp_path / f"p{order}")
        field = read_restart(tmp_path / f"p{order}" / RESTART_FILE).field
        disc = build_discretization(config, orders=field.orders)
        error = field.copy()
        error.data -= initial_condition(config.initial_condition, disc, t=report.time).data
        errors.append(_l2_norm(disc, error, slice(0, 1)))
    assert errors[0] > errors[1] > errors[2]
    assert _decay_rate(orders, errors) < -0.25
