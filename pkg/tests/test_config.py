import json

import pytest

from prosodike.config import SEED_ENV, ConfigError, RunConfig, load_config


def test_defaults_round_trip():
    cfg = RunConfig()
    assert RunConfig.from_dict(json.loads(cfg.canonical_json())) == cfg
    assert len(cfg.config_hash) == 64


def test_hash_ignores_key_order(tmp_path):
    a = {"seed": 4, "model": {"dim": 16, "steps": 10}, "cwt": {"num_scales": 6}}
    b = {"cwt": {"num_scales": 6}, "model": {"steps": 10, "dim": 16}, "seed": 4}
    assert RunConfig.from_dict(a).config_hash == RunConfig.from_dict(b).config_hash
    assert RunConfig.from_dict(a).config_hash != RunConfig.from_dict({**a, "seed": 5}).config_hash


@pytest.mark.parametrize(
    "bad",
    [
        {"sede": 1},
        {"model": {"dimension": 8}},
        {"cwt": {"aggregation": "mean"}},
        {"features": {"norm_exponent": 3}},
        {"seed": "zero"},
        {"control": {"target": "loudest"}},
        [],
    ],
)
def test_rejects_bad_documents(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_tune_grid_from_step():
    cfg = RunConfig.from_dict({"tune": {"weights_step": 0.5, "num_scales": [6]}})
    assert len(cfg.tune.weights) == 6
    assert cfg.tune.num_scales == (6,)


def test_env_seed_override(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 3}))
    assert load_config(str(path), environ={}).seed == 3
    assert load_config(str(path), environ={SEED_ENV: "11"}).seed == 11
    assert load_config(None, environ={SEED_ENV: " "}).seed == 0
    with pytest.raises(ConfigError):
        load_config(None, environ={SEED_ENV: "x"})


def test_invalid_json_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(path), environ={})


def test_with_section_and_model_config():
    cfg = RunConfig().with_section("model", steps=7).with_section("seed", value=9)
    assert cfg.model.steps == 7
    assert cfg.model_config.seed == 9
    with pytest.raises(ConfigError):
        RunConfig().with_section("model", bogus=1)
