"""
Tests for experiment configuration loading.
"""

import json

import pytest

from config.config_manager import SEED_OVERRIDE_ENV, ConfigManager, TaskType
from config.settings import IntegrationSettings, SystemSettings
from core.exceptions import ConfigParseError, ConfigValidationError

VALID_YAML = """
name: tiny
measures:
  u:
    name: uniform
    params: {a: -1.7320508075688772, b: 1.7320508075688772}
tasks:
  - type: kernel1d
    measure: u
    label: uniform
  - type: clt
    measure: u
    seed: 3
    params: {n_list: [1, 2]}
settings:
  clt:
    seed: 11
  output:
    out_dir: reports/tiny
"""


@pytest.fixture
def config_file(tmp_path):
    """Write a config file with the given text and suffix."""
    def write(text, suffix=".yaml"):
        path = tmp_path / f"experiment{suffix}"
        path.write_text(text, encoding="utf-8")
        return path
    return write


@pytest.fixture(autouse=True)
def clear_seed_override(monkeypatch):
    monkeypatch.delenv(SEED_OVERRIDE_ENV, raising=False)


class TestConfigLoading:
    """Test cases for ConfigManager.load."""

    def test_load_yaml(self, config_file):
        """Test loading a valid YAML experiment."""
        manager = ConfigManager()
        experiment = manager.load(config_file(VALID_YAML))

        assert experiment.name == "tiny"
        assert experiment.measures["u"].name == "uniform"
        assert [t.type for t in experiment.tasks] == [TaskType.KERNEL1D.value, TaskType.CLT.value]
        assert experiment.tasks[1].params["n_list"] == [1, 2]
        assert manager.system_settings.clt.seed == 11
        assert manager.system_settings.output.out_dir == "reports/tiny"
        assert manager.get("settings.clt.seed") == 11
        assert manager.get("settings.missing.key", "default") == "default"

    def test_load_json(self, config_file):
        """Test loading the same experiment from JSON."""
        data = {
            "name": "tiny-json",
            "measures": {"g": {"name": "gaussian", "params": {"variance": 1.0}}},
            "tasks": [{"type": "spectral", "measure": "g"}],
        }
        experiment = ConfigManager().load(config_file(json.dumps(data), ".json"))

        assert experiment.name == "tiny-json"
        assert experiment.tasks[0].type == "spectral"

    def test_yaml_syntax_error_has_position(self, config_file):
        """Test that YAML syntax errors carry a line and column."""
        text = "name: broken\nmeasures:\n  g: {name: gaussian\ntasks: []\n"
        with pytest.raises(ConfigParseError) as exc_info:
            ConfigManager().load(config_file(text))

        assert exc_info.value.line >= 3
        assert exc_info.value.column >= 1
        assert "line" in str(exc_info.value)

    def test_json_syntax_error_has_position(self, config_file):
        """Test that JSON syntax errors carry a line and column."""
        with pytest.raises(ConfigParseError) as exc_info:
            ConfigManager().load(config_file('{\n  "name": "x",\n  "measures": }', ".json"))

        assert exc_info.value.line == 3

    def test_top_level_must_be_mapping(self, config_file):
        """Test rejection of a non-mapping document."""
        with pytest.raises(ConfigParseError):
            ConfigManager().load(config_file("- just\n- a list\n"))

    def test_missing_file(self, tmp_path):
        """Test that a missing file is a parse error."""
        with pytest.raises(ConfigParseError):
            ConfigManager().load(tmp_path / "absent.yaml")

    def test_undeclared_measure(self, config_file):
        """Test that tasks must reference declared measures."""
        text = VALID_YAML.replace("measure: u\n    label", "measure: v\n    label")
        with pytest.raises(ConfigValidationError) as exc_info:
            ConfigManager().load(config_file(text))
        assert "undeclared measure 'v'" in str(exc_info.value)

    def test_unknown_catalog_measure(self, config_file):
        """Test that measure names are checked against the catalog."""
        text = VALID_YAML.replace("name: uniform", "name: lognormal")
        with pytest.raises(ConfigValidationError) as exc_info:
            ConfigManager().load(config_file(text))
        assert "unknown measure 'lognormal'" in str(exc_info.value)

    def test_unknown_task_type(self, config_file):
        """Test rejection of an unknown task type."""
        text = VALID_YAML.replace("type: clt", "type: entropy")
        with pytest.raises(ConfigValidationError):
            ConfigManager().load(config_file(text))

    def test_unknown_settings_key(self, config_file):
        """Test that unknown settings keys are validation errors."""
        text = VALID_YAML.replace("seed: 11", "seed: 11\n    flavour: strawberry")
        with pytest.raises(ConfigValidationError):
            ConfigManager().load(config_file(text))


class TestSeedOverride:
    """Test cases for the seed override environment variable."""

    def test_override_replaces_every_seed(self, config_file, monkeypatch):
        """Test that the override reaches settings and tasks."""
        monkeypatch.setenv(SEED_OVERRIDE_ENV, "99")
        manager = ConfigManager()
        experiment = manager.load(config_file(VALID_YAML))

        assert all(task.seed == 99 for task in experiment.tasks)
        assert manager.system_settings.clt.seed == 99
        assert manager.system_settings.integration.seed == 99

    def test_invalid_override(self, config_file, monkeypatch):
        """Test that a non-integer override is rejected."""
        monkeypatch.setenv(SEED_OVERRIDE_ENV, "seven")
        with pytest.raises(ConfigValidationError):
            ConfigManager().load(config_file(VALID_YAML))

    def test_save_effective_config(self, config_file, monkeypatch, tmp_path):
        """Test writing the effective configuration back out."""
        monkeypatch.setenv(SEED_OVERRIDE_ENV, "5")
        manager = ConfigManager()
        manager.load(config_file(VALID_YAML))
        out = tmp_path / "effective.yaml"

        assert manager.save_config(out)
        assert ConfigManager().load(out).tasks[0].seed == 5


class TestSystemSettings:
    """Test cases for SystemSettings."""

    def test_defaults(self):
        """Test default settings."""
        settings = SystemSettings.from_dict(None)

        assert settings.workers.jobs == 1
        assert settings.output.formats == ["csv", "json", "md"]
        assert not settings.output.include_timing

    def test_rule_keys_from_yaml(self):
        """Test that string rule keys and list pairs are coerced."""
        settings = SystemSettings.from_dict({"integration": {"rules": {"1": [32, 8], "2": [12, 4]}}})

        assert settings.integration.rule_for(1) == (32, 8)
        assert settings.integration.rule_for(2) == (12, 4)

    def test_unknown_integration_mode(self):
        """Test rejection of an unknown integration mode."""
        with pytest.raises(ValueError):
            IntegrationSettings(mode="sparse")

    def test_round_trip_dict(self):
        """Test that to_dict output rebuilds the same settings."""
        settings = SystemSettings.from_dict({"clt": {"t": 0.5, "n_list": [2, 4]}})
        assert SystemSettings.from_dict(settings.to_dict()) == settings
