"""Correction-record export in the navsmooth file format.

One row per trace epoch: t, 225 forward-modification entries (column-major),
225 backward-modification entries, 15 correction entries. Inference runs in
eval mode with the bound ramp frozen at the final training epoch; a trailing
window shorter than the configured length is padded by repeating the last
row and truncated after the forward pass so every epoch gets a record.
"""

from __future__ import annotations

import numpy as np
import torch

from .config import ModelConfig, N_STATE
from .data import FusionTrace, window_starts
from .model import CorrectionTransformer


def compute_records(model: CorrectionTransformer, trace: FusionTrace, cfg: ModelConfig,
                    frozen_epoch: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(d_f, d_b, c) arrays of shape (N, 15, 15) / (N, 15) for all epochs."""
    n = len(trace)
    window = cfg.window
    starts = window_starts(n, window)
    u_all = trace.input_rows()
    bounds = torch.as_tensor(cfg.bounds(frozen_epoch), dtype=torch.float64)

    d_f = np.zeros((n, N_STATE, N_STATE))
    d_b = np.zeros((n, N_STATE, N_STATE))
    c = np.zeros((n, N_STATE))

    model.eval()
    with torch.no_grad():
        for s in starts:
            stop = min(s + window, n)
            chunk = u_all[s: stop]
            if len(chunk) < window:
                pad = np.repeat(chunk[-1:], window - len(chunk), axis=0)
                chunk = np.concatenate([chunk, pad], axis=0)
            u = torch.as_tensor(chunk, dtype=torch.float64).unsqueeze(0)
            df_t, db_t, c_t = model.records(u, bounds)
            take = stop - s
            d_f[s: stop] = df_t[0, :take].numpy()
            d_b[s: stop] = db_t[0, :take].numpy()
            c[s: stop] = c_t[0, :take].numpy()
    return d_f, d_b, c


def export_records(model: CorrectionTransformer, trace: FusionTrace, cfg: ModelConfig,
                   path, frozen_epoch: int) -> None:
    """Write the per-epoch correction records for the fused trace."""
    d_f, d_b, c = compute_records(model, trace, cfg, frozen_epoch)
    n = len(trace)
    rows = np.zeros((n, 1 + 225 + 225 + 15))
    rows[:, 0] = trace.t
    rows[:, 1:226] = d_f.transpose(0, 2, 1).reshape(n, 225)
    rows[:, 226:451] = d_b.transpose(0, 2, 1).reshape(n, 225)
    rows[:, 451:466] = c
    header = ("t," + ",".join(f"df{i}" for i in range(225)) + ","
              + ",".join(f"db{i}" for i in range(225)) + ","
              + ",".join(f"c{i}" for i in range(15)))
    np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=header, comments="")
