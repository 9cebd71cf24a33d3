"""Secondary acceptance: file-interface equivalence, overfit convergence,
bound compliance. Run with ``pytest -v -s`` for one pass/fail line each.

The overfit fixture trains the full-size network for 50 epochs on a 60 s
biased trajectory, which takes a few minutes on CPU.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from blends_trainer.config import ModelConfig
from blends_trainer.data import load_fusion_trace, load_truth
from blends_trainer.export import export_records
from blends_trainer.train import train
from conftest import run_blends_with_records

OVERFIT_EPOCHS = 50


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", flush=True)
    assert ok, f"{name}: {detail}"


def _estimate_rows(path) -> list[str]:
    return path.read_text().splitlines()[1:]


def test_zero_init_export_reproduces_tfs_through_files(workspace):
    records_path = workspace["root"] / "zero_records.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "blends_trainer.cli", "export",
         "--model", "unused", "--zero-init",
         "--trace", str(workspace["fusion_trace"]),
         "--out", str(records_path)],
        capture_output=True, text=True, timeout=600,
    )
    assert proc.returncode == 0, proc.stderr

    out_dir = run_blends_with_records(workspace, records_path, "blends_zero")
    blends_rows = _estimate_rows(out_dir / "blends_estimate.csv")
    tfs_rows = _estimate_rows(workspace["tfs_estimate"])
    assert len(blends_rows) == len(tfs_rows)
    if blends_rows == tfs_rows:
        worst = 0.0
    else:
        worst = 0.0
        for a, b in zip(blends_rows, tfs_rows):
            va = np.fromstring(a, sep=",")
            vb = np.fromstring(b, sep=",")
            scale = np.maximum(np.abs(vb), 1e-30)
            worst = max(worst, float((np.abs(va - vb) / scale).max()))
    _report("zero-init export reproduces the classical smoother (1e-12)",
            worst <= 1e-12, f"max relative row deviation {worst:.2e}")


@pytest.fixture(scope="session")
def overfit(workspace):
    # desk-scale settings: batch 8 gives five steps per epoch on the 40
    # windows of a 60 s trace, and lr 3e-4 keeps the zero-initialized heads
    # out of tanh saturation (1e-2 drives the raw outputs several units per
    # step at this data size and strands them on the wrong bound)
    trace = load_fusion_trace(workspace["fusion_trace"])
    truth = load_truth(workspace["truth"])
    cfg = ModelConfig(batch_size=8, seed=7, lr=3e-4)
    model, history = train(trace, truth, cfg, epochs=OVERFIT_EPOCHS)
    records_path = workspace["root"] / "trained_records.csv"
    export_records(model, trace, cfg, records_path, frozen_epoch=OVERFIT_EPOCHS)
    return {"model": model, "history": history, "cfg": cfg,
            "records": records_path, "trace": trace}


def test_all_terms_decrease_in_moving_average(overfit):
    history = overfit["history"]
    window = 5
    details = []
    ok = True
    for term in ("position", "velocity", "rotation", "covariance"):
        series = np.asarray(history[f"eval_{term}"])
        head = series[:window].mean()
        tail = series[-window:].mean()
        tol = 1e-6 * max(abs(head), 1e-30)
        term_ok = tail <= head + tol
        ok = ok and term_ok
        details.append(f"{term} {head:.6g}->{tail:.6g}")
    _report("all four loss terms non-increasing in 5-epoch moving average",
            ok, "; ".join(details))


def test_overfit_halves_tfs_horizontal_rmse(workspace, overfit):
    out_dir = run_blends_with_records(workspace, overfit["records"], "blends_trained")
    fused = json.loads((out_dir / "summary.json").read_text())
    tfs = json.loads(workspace["tfs_summary"].read_text())
    fused_rmse = fused["estimators"]["blends"]["horizontal_rmse"]
    tfs_rmse = tfs["estimators"]["tfs"]["horizontal_rmse"]
    _report("trained fusion horizontal RMSE <= 50% of the classical smoother",
            fused_rmse <= 0.5 * tfs_rmse,
            f"trained {fused_rmse:.3f} m vs classical {tfs_rmse:.3f} m")


def test_exported_corrections_obey_ramped_bounds(overfit):
    rows = np.loadtxt(overfit["records"], delimiter=",", skiprows=1, ndmin=2)
    assert rows.shape[1] == 466
    c = rows[:, 451:466]
    bound = overfit["cfg"].bounds(OVERFIT_EPOCHS)
    ok = bool((np.abs(c) <= bound + 1e-15).all())
    _report("every exported correction obeys the epoch's bound vector",
            ok, f"max |c|/bound = {(np.abs(c) / bound).max():.6f}")


def test_full_rank_modifications_in_export(overfit):
    rows = np.loadtxt(overfit["records"], delimiter=",", skiprows=1, ndmin=2)
    sample = rows[:: max(len(rows) // 25, 1)]
    for row in sample:
        d_f = row[1:226].reshape(15, 15, order="F")
        d_b = row[226:451].reshape(15, 15, order="F")
        assert abs(np.linalg.det(d_f)) > 1e-30
        assert abs(np.linalg.det(d_b)) > 1e-30


def test_training_log_written(workspace):
    trace = load_fusion_trace(workspace["fusion_trace"])
    truth = load_truth(workspace["truth"])
    cfg = ModelConfig(batch_size=8, seed=9)
    log_path = workspace["root"] / "train_log.csv"
    train(trace, truth, cfg, epochs=2, log_path=log_path)
    header = log_path.read_text().splitlines()[0].split(",")
    assert header[0] == "epoch"
    for term in ("position", "velocity", "rotation", "covariance", "total"):
        assert f"train_{term}" in header
        assert f"eval_{term}" in header
    data = np.loadtxt(log_path, delimiter=",", skiprows=1, ndmin=2)
    assert data.shape[0] == 2
