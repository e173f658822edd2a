from unittest.mock import patch

import pytest
from typer.testing import CliRunner

from dgflow.cli import app
from dgflow.core.control_file import parse_control_file
from dgflow.core.init import ControlFileInitializer
from dgflow.core.printer import PLAIN_OUTPUT_ENV
from dgflow.core.solver import CRASH_FILE, RESTART_FILE

runner = CliRunner()

CASE = """
mesh             = box
mesh elements    = 2, 2, 2
polynomial order = 2
initial condition = uniform
velocity         = 0.3, -0.2, 0.1
cfl              = 0.5
max iterations   = 2
output directory = {output}
"""


@pytest.fixture(autouse=True)
def cli_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LOG_FILE", str(tmp_path / "logs" / "dgflow.json"))
    monkeypatch.setenv(PLAIN_OUTPUT_ENV, "1")
    monkeypatch.delenv("DGFLOW_THREADS", raising=False)


@pytest.fixture
def case_file(tmp_path):
    path = tmp_path / "case.control"
    path.write_text(CASE.format(output=tmp_path / "out"))
    return path


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert "dgflow" in result.output or "Version info not available" in result.output


def test_invalid_timezone(case_file):
    result = runner.invoke(app, ["--timezone", "Mars/Olympus", "check", str(case_file)])
    assert result.exit_code == 2


def test_check_valid(case_file):
    result = runner.invoke(app, ["check", str(case_file)])
    assert result.exit_code == 0
    assert "Elements : 2 x 2 x 2" in result.output
    assert "Control file is valid!" in result.output


def test_check_invalid(tmp_path):
    path = tmp_path / "broken.control"
    path.write_text("polynomial ordr = 3\n")
    result = runner.invoke(app, ["check", str(path)])
    assert result.exit_code == 1


def test_check_missing_file(tmp_path):
    result = runner.invoke(app, ["check", str(tmp_path / "nope.control")])
    assert result.exit_code == 1


def test_run(case_file, tmp_path):
    result = runner.invoke(app, ["run", str(case_file)])
    assert result.exit_code == 0, result.output
    assert "Steps : 2" in result.output
    assert "Run finished successfully!" in result.output
    assert (tmp_path / "out" / RESTART_FILE).exists()


def test_run_options_after_case(case_file, tmp_path):
    elsewhere = tmp_path / "elsewhere"
    result = runner.invoke(app, ["run", str(case_file), "-j", "2", "-o", str(elsewhere)])
    assert result.exit_code == 0, result.output
    assert (elsewhere / "monitors.csv").exists()
    assert not (tmp_path / "out").exists()


def test_run_from_restart(case_file, tmp_path):
    assert runner.invoke(app, ["run", str(case_file)]).exit_code == 0
    restart = tmp_path / "out" / RESTART_FILE
    result = runner.invoke(app, ["run", str(case_file), "--restart", str(restart), "-o", str(tmp_path / "again")])
    # The step counter already sits at the iteration limit.
    assert result.exit_code == 0, result.output
    assert "Steps : 0" in result.output


def test_run_rejects_zero_threads(case_file):
    result = runner.invoke(app, ["run", str(case_file), "--threads", "0"])
    assert result.exit_code == 2


def test_run_invalid_case(tmp_path):
    path = tmp_path / "broken.control"
    path.write_text("mesh = box\n")
    result = runner.invoke(app, ["run", str(path)])
    assert result.exit_code == 1


def test_run_missing_restart(case_file, tmp_path):
    result = runner.invoke(app, ["run", str(case_file), "-r", str(tmp_path / "missing.dgsm")])
    assert result.exit_code == 1


def test_run_inadmissible_state(case_file, tmp_path, monkeypatch):
    def corrupting_step(field, dt, scheme, residual, register=None):
        field.element(2)[0, 0, 0, 0] = -1.0
        field.time += dt
        return field

    monkeypatch.setattr("dgflow.core.solver.rk_step", corrupting_step)
    result = runner.invoke(app, ["run", str(case_file)])
    assert result.exit_code == 2
    assert CRASH_FILE in result.output
    assert (tmp_path / "out" / CRASH_FILE).exists()


def test_init(tmp_path):
    path = tmp_path / "tgv.control"
    values = {"elements": 3, "order": 2, "final_time": 2.0, "mach": 0.1}
    with patch.object(ControlFileInitializer, "_prompt_for_values", return_value=values):
        result = runner.invoke(app, ["--init", "--config", str(path)])
    assert result.exit_code == 0
    assert parse_control_file(path.read_text()).mesh.elements == (3, 3, 3)


def test_init_failure(tmp_path):
    with patch.object(ControlFileInitializer, "_prompt_for_values", side_effect=KeyboardInterrupt):
        result = runner.invoke(app, ["--init", "--config", str(tmp_path / "x.control")])
    assert result.exit_code == 1
