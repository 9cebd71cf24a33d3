import json
import subprocess
import sys

import pytest

from navsmooth.cli import main
from navsmooth.pipeline import RunConfig, run_pipeline
from navsmooth.simkit import SensorNoiseSpec, TrajectorySpec


def light_config(mode, out_dir=None, **overrides):
    kwargs = dict(
        mode=mode,
        out_dir=str(out_dir) if out_dir else None,
        seed=5,
        trajectory=TrajectorySpec(pattern="lawnmower", duration=20.0, speed=2.0),
        sensors=SensorNoiseSpec(gnss_mu=0.0, gnss_std=0.5, seed=5),
    )
    kwargs.update(overrides)
    return RunConfig(**kwargs)


def test_simulate_writes_deterministic_files(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_pipeline(light_config("simulate", out1))
    run_pipeline(light_config("simulate", out2))
    for name in ("truth.csv", "imu.csv", "gnss.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_blends_zero_provider_equals_tfs_outputs(tmp_path):
    out_tfs = tmp_path / "tfs"
    out_blends = tmp_path / "blends"
    run_pipeline(light_config("tfs", out_tfs))
    run_pipeline(light_config("blends", out_blends, provider="zero"))
    tfs_rows = (out_tfs / "tfs_estimate.csv").read_text().splitlines()[1:]
    blends_rows = (out_blends / "blends_estimate.csv").read_text().splitlines()[1:]
    assert tfs_rows == blends_rows


def test_summary_contains_per_axis_rmse_keys(tmp_path):
    out = tmp_path / "run"
    run_pipeline(light_config("tfs", out))
    summary = json.loads((out / "summary.json").read_text())
    for est in ("ekf", "tfs"):
        keys = summary["estimators"][est]["rmse"].keys()
        assert set(keys) == {"p_N", "p_E", "p_D", "v_N", "v_E", "v_D", "phi", "theta", "psi"}


def test_motivation_study_emits_three_configs(tmp_path):
    out = tmp_path / "study"
    cfg = RunConfig(
        mode="motivation-study",
        out_dir=str(out),
        seed=6,
        trajectory=TrajectorySpec(pattern="lawnmower", duration=20.0, speed=2.0),
        sensors=SensorNoiseSpec(seed=6),
    )
    result = run_pipeline(cfg)
    assert set(result["configs"]) == {"mu_0.0", "mu_1.5", "mu_3.0"}
    for mu in ("mu_0.0", "mu_1.5", "mu_3.0"):
        for est in ("ekf", "tfs", "rtss"):
            assert (out / mu / f"{est}_estimate.csv").exists()
        summary = json.loads((out / mu / "summary.json").read_text())
        assert set(summary["estimators"]) == {"ekf", "tfs", "rtss"}
    assert (out / "study_summary.json").exists()
    assert (out / "mu_3.0" / "plot_traj.csv").exists()
    assert (out / "mu_3.0" / "plot_gnss.csv").exists()


def test_cli_reports_missing_mode(capsys):
    rc = main([])
    err = capsys.readouterr().err
    assert rc == 2
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "ARGUMENT"


def test_cli_reports_missing_config_file(capsys):
    rc = main(["--config", "/nonexistent/config.json", "--mode", "ekf"])
    assert rc == 2


def test_cli_end_to_end_run(tmp_path, capsys):
    config = {
        "mode": "ekf",
        "seed": 4,
        "trajectory": {"pattern": "lawnmower", "duration": 10.0, "speed": 2.0},
        "sensors": {"gnss_mu": 0.0, "gnss_std": 0.5, "seed": 4},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    rc = main(["--config", str(cfg_path), "--out", str(tmp_path / "out")])
    assert rc == 0
    assert (tmp_path / "out" / "ekf_estimate.csv").exists()
    assert "ekf" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    config = {
        "mode": "simulate",
        "seed": 1,
        "trajectory": {"pattern": "circle", "duration": 5.0, "speed": 2.0, "radius": 15.0},
        "sensors": {"seed": 1},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    proc = subprocess.run(
        [sys.executable, "-m", "navsmooth.cli", "--config", str(cfg_path),
         "--out", str(tmp_path / "out")],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "out" / "imu.csv").exists()


def test_bad_provider_rejected(tmp_path):
    cfg = light_config("blends", tmp_path / "x", provider="magic")
    with pytest.raises(Exception):
        run_pipeline(cfg)


def test_config_path_validation(tmp_path):
    with pytest.raises(Exception):
        RunConfig(mode="ekf", imu_path=str(tmp_path / "missing.csv"),
                  gnss_path=str(tmp_path / "missing2.csv"))


def test_ingest_round_trip(tmp_path):
    sim_out = tmp_path / "sim"
    run_pipeline(light_config("simulate", sim_out))
    cfg = RunConfig(
        mode="ekf",
        out_dir=str(tmp_path / "est"),
        seed=5,
        imu_path=str(sim_out / "imu.csv"),
        gnss_path=str(sim_out / "gnss.csv"),
        truth_path=str(sim_out / "truth.csv"),
    )
    result = run_pipeline(cfg)
    assert "ekf" in result["summary"]["estimators"]
    assert result["summary"]["estimators"]["ekf"]["horizontal_rmse"] < 1.0
