import math
from unittest.mock import patch

from dgflow.core.control_file import parse_control_file, render_control_file
from dgflow.core.init import ControlFileInitializer, template_config
from dgflow.core.initial_conditions import InitialConditionKind
from dgflow.core.physics import TwoPointFlux

VALUES = {"elements": 2, "order": 2, "final_time": 0.5, "mach": 0.2}


def test_template_config():
    config = template_config(**VALUES)
    assert config.mesh.elements == (2, 2, 2)
    assert config.mesh.upper == (2 * math.pi,) * 3
    assert config.numerics.volume_flux is TwoPointFlux.ENTROPY_CONSERVING
    assert config.initial_condition.name is InitialConditionKind.TAYLOR_GREEN
    assert config.initial_condition.mach == 0.2
    assert parse_control_file(render_control_file(config)) == config


def test_wizard_writes_control_file(tmp_path):
    path = tmp_path / "tgv.control"
    with patch.object(ControlFileInitializer, "_prompt_for_values", return_value=VALUES):
        assert ControlFileInitializer().run(str(path)) is True
    config = parse_control_file(path.read_text())
    assert config.time.final_time == 0.5


def test_wizard_dry_run(tmp_path):
    path = tmp_path / "tgv.control"
    with patch.object(ControlFileInitializer, "_prompt_for_values", return_value=VALUES):
        assert ControlFileInitializer().run(str(path), dry_run=True) is True
    assert not path.exists()


def test_wizard_rejects_invalid_values(tmp_path):
    values = dict(VALUES, order=0)
    with patch.object(ControlFileInitializer, "_prompt_for_values", return_value=values):
        assert ControlFileInitializer().run(str(tmp_path / "bad.control")) is False


def test_wizard_interrupted(tmp_path):
    with patch.object(
        ControlFileInitializer, "_prompt_for_values", side_effect=KeyboardInterrupt
    ):
        assert ControlFileInitializer().run(str(tmp_path / "x.control")) is False


def test_prompts_retry_until_valid():
    answers = ["four", "4", "3", "2*pi", "0.1"]
    with patch("dgflow.core.init.Prompt.ask", side_effect=answers) as ask:
        values = ControlFileInitializer()._prompt_for_values()
    assert ask.call_count == 5
    assert values["elements"] == 4
    assert values["order"] == 3
    assert values["final_time"] == 2 * math.pi
    assert values["mach"] == 0.1
