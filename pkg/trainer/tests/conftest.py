import json
import subprocess
import sys
from pathlib import Path

import pytest

WORKSPACE_SEED = 200


def run_navsmooth(args: list[str]) -> None:
    """Invoke the smoother pipeline through its CLI (the file interface)."""
    proc = subprocess.run([sys.executable, "-m", "navsmooth.cli", *args],
                          capture_output=True, text=True, timeout=600)
    if proc.returncode != 0:
        raise RuntimeError(f"navsmooth {' '.join(args)} failed:\n{proc.stderr}")


@pytest.fixture(scope="session")
def workspace(tmp_path_factory) -> dict:
    """Simulated 60 s biased dataset plus a smoother run with the fusion
    trace exported, produced entirely through the pipeline CLI."""
    root = tmp_path_factory.mktemp("trainer_ws")
    sim_dir = root / "sim"
    tfs_dir = root / "tfs"

    sim_cfg = {
        "mode": "simulate",
        "seed": WORKSPACE_SEED,
        "out_dir": str(sim_dir),
        "trajectory": {"pattern": "lawnmower", "duration": 60.0, "speed": 2.0},
        "sensors": {"gnss_mu": 3.0, "gnss_std": 0.5, "seed": WORKSPACE_SEED},
    }
    sim_cfg_path = root / "sim.json"
    sim_cfg_path.write_text(json.dumps(sim_cfg))
    run_navsmooth(["--config", str(sim_cfg_path)])

    tfs_cfg = {
        "mode": "tfs",
        "seed": WORKSPACE_SEED,
        "out_dir": str(tfs_dir),
        "imu_path": str(sim_dir / "imu.csv"),
        "gnss_path": str(sim_dir / "gnss.csv"),
        "truth_path": str(sim_dir / "truth.csv"),
        "emit_fusion_trace": True,
    }
    tfs_cfg_path = root / "tfs.json"
    tfs_cfg_path.write_text(json.dumps(tfs_cfg))
    run_navsmooth(["--config", str(tfs_cfg_path)])

    return {
        "root": root,
        "imu": sim_dir / "imu.csv",
        "gnss": sim_dir / "gnss.csv",
        "truth": sim_dir / "truth.csv",
        "fusion_trace": tfs_dir / "fusion_trace.csv",
        "tfs_estimate": tfs_dir / "tfs_estimate.csv",
        "tfs_summary": tfs_dir / "summary.json",
        "tfs_config": tfs_cfg,
    }


def run_blends_with_records(workspace: dict, records_path: Path, out_name: str) -> Path:
    """Replay the fused pipeline with a correction-record file; returns the
    output directory."""
    out_dir = workspace["root"] / out_name
    cfg = {
        "mode": "blends",
        "seed": WORKSPACE_SEED,
        "out_dir": str(out_dir),
        "imu_path": str(workspace["imu"]),
        "gnss_path": str(workspace["gnss"]),
        "truth_path": str(workspace["truth"]),
        "provider": f"file:{records_path}",
    }
    cfg_path = workspace["root"] / f"{out_name}.json"
    cfg_path.write_text(json.dumps(cfg))
    run_navsmooth(["--config", str(cfg_path)])
    return out_dir
