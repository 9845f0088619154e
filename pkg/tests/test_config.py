import json
import math

import pytest

from es_verify.config import AppConfig, load_config, load_defaults
from es_verify.domain import UsageError


def test_shipped_defaults_load(app_config):
    assert app_config.es.params().tau == pytest.approx(0.2)
    assert app_config.runtime.seed == 20190807
    assert app_config.experiments.sigma_floor == 1e-100
    assert app_config.checks.scaling_factors == [1.0, 2.0, 4.0]
    assert "sphere:d=2" in app_config.checks.probes


def test_round_trip(app_config):
    assert AppConfig.from_dict(app_config.to_dict()) == app_config


def test_missing_sections_take_dataclass_defaults():
    config = AppConfig.from_dict({"es": {"c_plus": 1.0, "c_minus": -0.25}})
    assert config.es.params().tau == pytest.approx(0.2)
    assert config.estimators.per_point_budget == 4000
    assert config.checks.probes == {}


@pytest.mark.parametrize("data", [
    {"plotting": {}},
    {"checks": {"sample_count": 10}},
])
def test_unknown_keys_are_rejected(data):
    with pytest.raises(UsageError):
        AppConfig.from_dict(data)


def test_dotted_overrides():
    config = load_config(overrides={"checks.samples": 5000, "runtime.seed": 3})
    assert config.checks.samples == 5000
    assert config.runtime.seed == 3


def test_override_through_a_value_fails():
    with pytest.raises(UsageError):
        load_config(overrides={"runtime.seed.low": 1})


def test_user_file_is_merged(tmp_path):
    path = tmp_path / "user.json"
    path.write_text(json.dumps({"es": {"c_minus": -math.log(2.0) / 9.0}, "runtime": {"jobs": 2}}))
    config = load_config(str(path))
    assert config.es.c_plus == pytest.approx(math.log(2.0))
    assert config.es.params().tau == pytest.approx(0.1)
    assert config.runtime.jobs == 2
    # sections not named in the file keep the shipped values
    assert config.experiments.presets == load_defaults()["experiments"]["presets"]


def test_unreadable_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(UsageError):
        load_config(str(path))
    with pytest.raises(UsageError):
        load_config(str(tmp_path / "absent.json"))
