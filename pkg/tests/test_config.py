import json

import pytest

from eoselm.config import ExperimentConfig, config_from_dict, config_to_dict, load_config, with_overrides
from eoselm.errors import ConfigurationError


def test_defaults_validate():
    cfg = ExperimentConfig()
    assert cfg.trials == 50 and cfg.model.K == 10 and cfg.featsel.w == 0.1 and cfg.grid.clear_cycles == 15.0


def test_dict_round_trip():
    cfg = ExperimentConfig()
    assert config_from_dict(config_to_dict(cfg)) == cfg


@pytest.mark.parametrize(
    "doc, where",
    [({"trails": 3}, "config"), ({"model": {"hidden": 3}}, "model"), ({"grid": {"faults": 2}}, "grid")],
)
def test_unknown_keys_rejected(doc, where):
    with pytest.raises(ConfigurationError, match=f"unknown key.*{where}"):
        config_from_dict(doc)


@pytest.mark.parametrize(
    "doc",
    [{"trials": 0}, {"model": {"mode": "batch"}}, {"model": {"L": 20, "n0": 5}}, {"featsel": {"sigma": 0}},
     {"grid": {"dt": 0.01}}, {"model": "big"}],
)
def test_invalid_values_rejected(doc):
    with pytest.raises(ConfigurationError):
        config_from_dict(doc)


def test_toml_and_json_agree(tmp_path):
    (tmp_path / "c.toml").write_text('seed = 3\ntrials = 4\n[model]\nL = 30\nL_grid = [5, 10]\n[grid]\nn_faults = 6\n')
    (tmp_path / "c.json").write_text(json.dumps({"seed": 3, "trials": 4, "model": {"L": 30, "L_grid": [5, 10]}, "grid": {"n_faults": 6}}))
    a, b = load_config(tmp_path / "c.toml"), load_config(tmp_path / "c.json")
    assert a == b and a.model.L_grid == (5, 10) and a.grid.n_faults == 6


def test_malformed_file(tmp_path):
    (tmp_path / "bad.toml").write_text("seed = = 1")
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "bad.toml")


def test_overrides_skip_none_and_reach_model():
    cfg = with_overrides(ExperimentConfig(), seed=5, trials=None, mode="chunk", chunk_size=8)
    assert cfg.seed == 5 and cfg.trials == 50 and cfg.model.mode == "chunk" and cfg.model.chunk_size == 8
