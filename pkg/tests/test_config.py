import json

import pytest

from smoothpeano.config import ALL_CHECKS, RunConfig, load_schema
from smoothpeano.errors import ConfigError
from smoothpeano.lune import lune_norm


def test_defaults_roundtrip():
    cfg = RunConfig()
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()
    assert set(cfg.checks) == set(ALL_CHECKS)
    assert load_schema()["additionalProperties"] is False


@pytest.mark.parametrize("bad", [
    {"unknown": 1},
    {"depth": 0},
    {"eps": {"base": 1.5, "scale": 1}},
    {"lune": {"preset": "circle"}},
    {"checks": ["jets", "nonsense"]},
    {"theorem": {"breakpoints": [0.5, 1.0], "k": [2, 2], "eps": [0.1]}},
    {"depth": 6, "max_order": 4},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.json")
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(p)


def test_schedules_and_samples():
    cfg = RunConfig.from_dict({"eps": {"base": 0.25, "scale": 2.0}, "check_eps": {"base": 0.1, "scale": 1.0},
                               "samples": {"cauchy": 50}})
    assert cfg.schedule()(1) == 0.5
    assert cfg.verification_schedule()(1) == pytest.approx(0.1)
    assert cfg.sample("cauchy", 10) == 50 and cfg.sample("other", 10) == 10


def test_lune_presets():
    hump = RunConfig.from_dict({"lune": {"preset": "hump", "amplitude": 0.05}}).build_lune()
    assert lune_norm(hump, 0).value == pytest.approx(0.05)
    weighted = RunConfig.from_dict({"lune": {"preset": "weighted-hump", "amplitude": 0.05,
                                             "coefficients": [1.0, 0.5]}}).build_lune()
    assert float(weighted.g(0.5)) == pytest.approx(0.05 * 1.25)
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"lune": {"preset": "weighted-hump", "coefficients": [-1.0]}}).build_lune()
