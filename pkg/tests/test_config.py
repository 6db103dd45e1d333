import json
import math
import pytest
from src.config import Config, ExperimentConfig, FRAMEWORKS, load_experiment_config


def test_default_experiment_matches_bundled_toml():
    config = load_experiment_config(Config.BASE_DIR / "configs" / "default.toml")
    assert config.frameworks == list(FRAMEWORKS)
    assert config.snr_db == Config.DEFAULT_SNR_DB
    assert config.n_subchannels == 64 and config.frames == 200
    assert config.latency_mode == "analytic" and config.report is True


def test_overrides_win_and_none_is_ignored(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"frames": 10, "channel": {"coder": "repetition:3"}, "snr_db": ["inf", 3]}),
                    encoding="utf-8")
    config = load_experiment_config(path, frames=4, seed=None)
    assert config.frames == 4 and config.seed == Config.SEED
    assert config.coder == "repetition:3"
    assert math.isinf(config.snr_db[0]) and config.snr_db[1] == 3.0
    assert config.to_dict()["snr_db"] == ["inf", 3.0]


def test_unknown_keys_are_ignored(tmp_path, caplog):
    path = tmp_path / "exp.toml"
    path.write_text('frames = 2\ncolour = "red"\n', encoding="utf-8")
    config = load_experiment_config(path)
    assert config.frames == 2
    assert "colour" in caplog.text


def test_validation_collects_every_problem():
    with pytest.raises(ValueError) as info:
        ExperimentConfig(frameworks=["gsar", "hologram"], bits_per_scalar=2, layout="half",
                         latency_mode="guess", coder="turbo").validate()
    message = str(info.value)
    for fragment in ("hologram", "bits_per_scalar", "layout", "latency_mode", "coder"):
        assert fragment in message


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_experiment_config(tmp_path / "nope.toml")
