import json

import numpy as np
import pytest

from floorpricer.cli import CONFIG_ENV_VAR, main
from floorpricer.engine import Engine, EngineConfig
from floorpricer.events import event_from_ground_truth
from floorpricer.grid import FloorGrid
from floorpricer.logio import write_events
from floorpricer.params import HyperParams

CONFIG = {
    "grid": {"kind": "geometric", "min": 50, "max": 5000, "k": 10},
    "hyper": {"latent_dim": 2, "decay_rate_revenue": 1e-3},
    "stream": {
        "n_users": 30,
        "n_placements": 4,
        "n_auctions": 400,
        "log_location": 6.2,
        "log_scale": 0.6,
    },
}


@pytest.fixture
def config_path(tmp_path):
    p = tmp_path / "config.json"
    p.write_text(json.dumps(CONFIG))
    return str(p)


def _log_path(tmp_path, n=120):
    grid = FloorGrid.geometric(50, 5000, 10)
    eng = Engine(grid, HyperParams.default(), EngineConfig(seed=0))
    rng = np.random.Generator(np.random.PCG64(1))
    events, t = [], 1_000_000
    for _ in range(n):
        t += int(rng.integers(1, 300))
        u, p = f"u{rng.integers(8)}", f"p{rng.integers(3)}"
        d = eng.choose_floor(u, p, t)
        b1 = int(rng.integers(0, 8_000))
        b2 = int(rng.integers(0, b1 + 1))
        events.append(event_from_ground_truth(t, u, p, d.floor, b1, b2))
    path = tmp_path / "auctions.jsonl"
    with open(path, "w") as fp:
        write_events(fp, events)
    return str(path)


def test_simulate_writes_report_and_figures(tmp_path, config_path):
    out = tmp_path / "report"
    rc = main([
        "simulate", "--config", config_path, "--setting", "S2",
        "--variants", "M2", "--out", str(out),
    ])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert "M2" in report["methods"]
    assert (out / "report.csv").exists()
    assert (out / "revenue_by_method.png").stat().st_size > 0


def test_config_via_environment(tmp_path, config_path, monkeypatch):
    monkeypatch.setenv(CONFIG_ENV_VAR, config_path)
    out = tmp_path / "report"
    rc = main(["simulate", "--setting", "S2", "--variants", "M2", "--out", str(out)])
    assert rc == 0
    assert (out / "report.json").exists()


def test_flags_override_config(tmp_path, config_path):
    out = tmp_path / "report"
    rc = main([
        "simulate", "--config", config_path, "--variants", "M2",
        "--auctions", "200", "--out", str(out),
    ])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["n_train"] + report["n_test"] == 200


def test_replay_and_checkpoint_cycle(tmp_path, config_path, capsys):
    log = _log_path(tmp_path)
    ckpt = tmp_path / "state.ckpt"
    rc = main([
        "replay", "--config", config_path, log, "--checkpoint-out", str(ckpt),
    ])
    assert rc == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["n_auctions"] == 120

    rc = main(["checkpoint", "inspect", str(ckpt)])
    assert rc == 0
    info = json.loads(capsys.readouterr().out)
    assert info["metrics"]["n_auctions"] == 120

    # replaying the same log on top of the restored state rewinds time,
    # which strict ordering rejects
    rc = main(["replay", log, "--checkpoint-in", str(ckpt)])
    assert rc == 2


def test_replay_lenient_skips_junk(tmp_path, config_path, capsys):
    log = _log_path(tmp_path)
    with open(log, "a") as fp:
        fp.write("this is not json\n")
    rc = main(["replay", "--config", config_path, log, "--lenient"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["n_auctions"] == 120
    rc = main(["replay", "--config", config_path, log])
    assert rc == 2  # strict mode fails on the junk line


def test_bench_prints_percentiles(capsys):
    rc = main(["bench", "--events", "60", "--grid-k", "12"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out["latency_ms"]) == {"p50", "p95", "p99", "mean"}


def test_tune_writes_surface(tmp_path, config_path, capsys):
    cfg = dict(CONFIG)
    cfg["tune"] = {"grid": {"bias_precision": [0.01, 1.0], "ucb_alpha": [0.5, 1.0]}}
    cfg_path = tmp_path / "tune.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "tuneout"
    rc = main([
        "tune", "--config", str(cfg_path), "--setting", "S2",
        "--variant", "M2", "--out", str(out),
    ])
    assert rc == 0
    surface = json.loads((out / "tuning_surface.json").read_text())
    assert len(surface) == 4
    assert all("average_revenue" in c for c in surface)
    assert (out / "tuning_surface.png").exists()


def test_missing_config_file_errors(tmp_path):
    rc = main([
        "simulate", "--config", str(tmp_path / "nope.json"),
        "--out", str(tmp_path / "o"),
    ])
    assert rc == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
