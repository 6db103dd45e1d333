import json
import numpy as np
import pytest
from main import main
from src.config import Config
from src.core.pointcloud import PointCloud, ply_write


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_rank_command(capsys):
    assert main(["rank", "--skeleton", str(Config.SKELETON_FILE)]) == 0
    ranking = _json(capsys)
    assert len(ranking) == 25
    weights = [entry["weight"] for entry in ranking]
    assert weights == sorted(weights, reverse=True)
    assert sum(weights) == pytest.approx(1.0)


def test_trace_gen_and_stats(tmp_path, capsys):
    out = tmp_path / "trace.json"
    assert main(["trace", "gen", "--kind", "slight_shaking", "--frames", "10", "--seed", "3", "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == str(out)
    assert main(["trace", "stats", "--trace", str(out), "--bins", "5"]) == 0
    stats = _json(capsys)
    assert len(stats["histograms"]) == 3 and len(stats["histograms"][0]["counts"]) == 5
    assert stats["movement_limit"] == list(Config.MOVEMENT_RANGE)


def test_metrics_command(tmp_path, capsys):
    cloud = PointCloud(np.random.default_rng(0).normal(size=(20, 3)), np.full((20, 3), 90))
    ply_write(cloud, tmp_path / "a.ply")
    assert main(["metrics", "--tx", str(tmp_path / "a.ply"), "--rx", str(tmp_path / "a.ply")]) == 0
    assert _json(capsys) == {"p2point": 0.0, "psnr_y": Config.PSNR_CAP_DB}


def test_ber_command(capsys):
    assert main(["ber", "--snr", "10", "--bits", "20000", "--seed", "1"]) == 0
    row = _json(capsys)[0]
    assert row["snr_db"] == 10.0 and 0.0 < row["empirical"] < 0.1


def test_simulate_and_plot(tmp_path, capsys):
    config = tmp_path / "exp.toml"
    config.write_text('frameworks = ["gsar", "pointcloud"]\nsnr_db = [10.0]\nframes = 2\nseed = 5\n'
                      "[scene]\navatar_points = 256\nstationary_points = 128\n"
                      "downsample_points = 128\nupsample_points = 256\n", encoding="utf-8")
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
    paths = _json(capsys)
    assert paths["report"] is None and (out / "results.csv").exists()

    assert main(["plot", "--results", paths["results"], "--figure", "psnr_y"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "snr_db,framework,mean,std"
    assert [line.split(",")[1] for line in lines[1:]] == ["pointcloud", "gsar"]


def test_errors_return_non_zero(tmp_path, capsys):
    assert main(["plot", "--results", str(tmp_path / "missing.csv"), "--figure", "mpjpe"]) == 1
    assert "Error fatal" in capsys.readouterr().err
