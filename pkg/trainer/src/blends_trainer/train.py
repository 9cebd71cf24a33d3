"""Training loop with per-term logging and the contracting-bound ramp."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from .config import ModelConfig
from .data import FusionTrace, TruthData, align_truth, window_starts
from .fusion import fuse_with_corrections
from .loss import bcl_terms
from .model import CorrectionTransformer, build_model

log = logging.getLogger("blends_trainer")

TERMS = ("total", "position", "velocity", "rotation", "covariance")


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class Batch:
    u: torch.Tensor
    p_f: torch.Tensor
    info_b: torch.Tensor
    dx_b: torch.Tensor
    nominal_pos: torch.Tensor
    nominal_vel: torch.Tensor
    nominal_att: torch.Tensor
    truth_pos: torch.Tensor
    truth_vel: torch.Tensor
    truth_att: torch.Tensor


def build_windows(trace: FusionTrace, truth: TruthData, window: int) -> Batch:
    """Stack all full windows of the trace into window-major tensors.

    Training uses only complete windows; export separately pads the trailing
    remainder so every epoch receives a record.
    """
    truth = align_truth(trace, truth)
    starts = [s for s in window_starts(len(trace), window) if s + window <= len(trace)]
    idx = np.stack([np.arange(s, s + window) for s in starts])

    u = trace.input_rows()[idx]

    def t(x):
        return torch.as_tensor(x, dtype=torch.float64)

    return Batch(
        u=t(u),
        p_f=t(trace.p_f[idx]),
        info_b=t(trace.info_b[idx]),
        dx_b=t(trace.dx_b[idx]),
        nominal_pos=t(trace.pos_geo[idx]),
        nominal_vel=t(trace.vel_ned[idx]),
        nominal_att=t(trace.att[idx]),
        truth_pos=t(truth.pos_geo[idx]),
        truth_vel=t(truth.vel_ned[idx]),
        truth_att=t(truth.att[idx]),
    )


def _slice(batch: Batch, sel) -> Batch:
    return Batch(**{k: getattr(batch, k)[sel] for k in batch.__dataclass_fields__})


def _evaluate(model: CorrectionTransformer, batch: Batch, cfg: ModelConfig,
              bounds: torch.Tensor) -> dict:
    model.eval()
    with torch.no_grad():
        d_f, d_b, c = model.records(batch.u, bounds)
        dx, p_s = fuse_with_corrections(batch.p_f, batch.info_b, batch.dx_b, d_f, d_b, c)
        terms = bcl_terms(cfg, dx, p_s, batch.nominal_pos, batch.nominal_vel,
                          batch.nominal_att, batch.truth_pos, batch.truth_vel,
                          batch.truth_att)
    return {k: float(v) for k, v in terms.items()}


def train(trace: FusionTrace, truth: TruthData, cfg: ModelConfig, epochs: int,
          log_path=None) -> tuple[CorrectionTransformer, dict]:
    """Fit the correction network; returns the model and the training log.

    The log maps each term name to per-epoch train and eval series. The
    bound ramp advances with the epoch counter; divergence (non-finite loss)
    aborts with the failing epoch and term values.
    """
    torch.manual_seed(cfg.seed)
    model = build_model(cfg).double()
    batch_all = build_windows(trace, truth, cfg.window)
    n_windows = batch_all.u.shape[0]

    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.lr,
                                  weight_decay=cfg.weight_decay)
    scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer, factor=cfg.lr_factor, patience=cfg.lr_patience, min_lr=cfg.lr_min)

    history: dict = {f"{phase}_{term}": [] for phase in ("train", "eval") for term in TERMS}
    rng = np.random.default_rng(cfg.seed)

    for epoch in range(epochs):
        bounds = torch.as_tensor(cfg.bounds(epoch), dtype=torch.float64)
        order = rng.permutation(n_windows)
        model.train()
        sums = {t: 0.0 for t in TERMS}
        n_batches = 0
        for lo in range(0, n_windows, cfg.batch_size):
            sel = order[lo: lo + cfg.batch_size]
            batch = _slice(batch_all, sel)
            optimizer.zero_grad()
            d_f, d_b, c = model.records(batch.u, bounds)
            dx, p_s = fuse_with_corrections(batch.p_f, batch.info_b, batch.dx_b,
                                            d_f, d_b, c)
            terms = bcl_terms(cfg, dx, p_s, batch.nominal_pos, batch.nominal_vel,
                              batch.nominal_att, batch.truth_pos, batch.truth_vel,
                              batch.truth_att)
            if not torch.isfinite(terms["total"]):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}: "
                    + ", ".join(f"{k}={float(v):.3e}" for k, v in terms.items()))
            terms["total"].backward()
            optimizer.step()
            for name in TERMS:
                sums[name] += float(terms[name].detach())
            n_batches += 1

        for name in TERMS:
            history[f"train_{name}"].append(sums[name] / n_batches)
        eval_terms = _evaluate(model, batch_all, cfg, bounds)
        for name in TERMS:
            history[f"eval_{name}"].append(eval_terms[name])
        scheduler.step(eval_terms["total"])
        log.info("epoch %d: train %.6g eval %.6g (pos %.4g vel %.4g rot %.4g cov %.6g)",
                 epoch, history["train_total"][-1], eval_terms["total"],
                 eval_terms["position"], eval_terms["velocity"],
                 eval_terms["rotation"], eval_terms["covariance"])

    history["epochs"] = epochs
    if log_path is not None:
        _write_log(log_path, history, epochs)
    return model, history


def _write_log(path, history: dict, epochs: int) -> None:
    cols = ["epoch"] + [f"{p}_{t}" for p in ("train", "eval") for t in TERMS]
    rows = np.column_stack([np.arange(epochs)]
                           + [np.asarray(history[c]) for c in cols[1:]])
    np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=",".join(cols), comments="")
