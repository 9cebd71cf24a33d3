"""Readers for the navsmooth fusion-trace and truth CSV interfaces.

Fusion trace columns (one row per epoch): t, dxf (15), dxb (15),
pf (225 column-major), pb (225), ib (225), sb (15), lat, lon, alt,
vn, ve, vd, q0..q3, noinfo. Truth columns: t, lat, lon, alt, vn, ve, vd,
q0..q3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FUSION_COLS = 1 + 15 + 15 + 225 + 225 + 225 + 15 + 10 + 1
TRUTH_COLS = 11


class TraceFormatError(ValueError):
    pass


def _load_csv(path, expected_cols: int) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline()
    n_header = len(header.strip().split(","))
    if n_header != expected_cols:
        raise TraceFormatError(
            f"{path}: expected {expected_cols} columns, header has {n_header}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != expected_cols:
        raise TraceFormatError(
            f"{path}: expected {expected_cols} columns, rows have {data.shape[1]}")
    return data


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    """Scalar-first quaternion batch (N,4) to rotation matrices (N,3,3)."""
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    rot = np.empty((len(q), 3, 3))
    rot[:, 0, 0] = 1 - 2 * (y * y + z * z)
    rot[:, 0, 1] = 2 * (x * y - w * z)
    rot[:, 0, 2] = 2 * (x * z + w * y)
    rot[:, 1, 0] = 2 * (x * y + w * z)
    rot[:, 1, 1] = 1 - 2 * (x * x + z * z)
    rot[:, 1, 2] = 2 * (y * z - w * x)
    rot[:, 2, 0] = 2 * (x * z - w * y)
    rot[:, 2, 1] = 2 * (y * z + w * x)
    rot[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return rot


@dataclass
class FusionTrace:
    """Per-epoch fusion inputs exported by the smoother pipeline."""

    t: np.ndarray
    dx_f: np.ndarray          # (N, 15)
    dx_b: np.ndarray          # (N, 15)
    p_f: np.ndarray           # (N, 15, 15)
    p_b: np.ndarray           # (N, 15, 15)
    info_b: np.ndarray        # (N, 15, 15)
    s_b: np.ndarray           # (N, 15)
    pos_geo: np.ndarray       # (N, 3)
    vel_ned: np.ndarray       # (N, 3)
    att: np.ndarray           # (N, 3, 3)
    no_info: np.ndarray       # (N,) bool

    def __len__(self) -> int:
        return len(self.t)

    def input_rows(self) -> np.ndarray:
        """Network inputs: [dx_f, dx_b, vec(P_f), vec(P_b)] per epoch."""
        n = len(self)
        return np.concatenate([
            self.dx_f,
            self.dx_b,
            self.p_f.transpose(0, 2, 1).reshape(n, 225),
            self.p_b.transpose(0, 2, 1).reshape(n, 225),
        ], axis=1)


def load_fusion_trace(path) -> FusionTrace:
    data = _load_csv(path, FUSION_COLS)
    n = len(data)
    return FusionTrace(
        t=data[:, 0],
        dx_f=data[:, 1:16],
        dx_b=data[:, 16:31],
        p_f=data[:, 31:256].reshape(n, 15, 15).transpose(0, 2, 1),
        p_b=data[:, 256:481].reshape(n, 15, 15).transpose(0, 2, 1),
        info_b=data[:, 481:706].reshape(n, 15, 15).transpose(0, 2, 1),
        s_b=data[:, 706:721],
        pos_geo=data[:, 721:724],
        vel_ned=data[:, 724:727],
        att=quat_to_rot(data[:, 727:731]),
        no_info=data[:, 731] > 0.5,
    )


@dataclass
class TruthData:
    t: np.ndarray
    pos_geo: np.ndarray
    vel_ned: np.ndarray
    att: np.ndarray


def load_truth(path) -> TruthData:
    data = _load_csv(path, TRUTH_COLS)
    return TruthData(
        t=data[:, 0],
        pos_geo=data[:, 1:4],
        vel_ned=data[:, 4:7],
        att=quat_to_rot(data[:, 7:11]),
    )


def align_truth(trace: FusionTrace, truth: TruthData, tol: float = 1e-6) -> TruthData:
    """Truth rows matching the trace epochs one-to-one."""
    if len(truth.t) == len(trace.t) and np.abs(truth.t - trace.t).max() <= tol:
        return truth
    idx = np.searchsorted(truth.t, trace.t)
    idx = np.clip(idx, 0, len(truth.t) - 1)
    if np.abs(truth.t[idx] - trace.t).max() > tol:
        raise TraceFormatError("truth epochs do not cover the trace epochs")
    return TruthData(t=truth.t[idx], pos_geo=truth.pos_geo[idx],
                     vel_ned=truth.vel_ned[idx], att=truth.att[idx])


def window_starts(n_epochs: int, window: int) -> list[int]:
    """Start indices of non-overlapping windows (stride equals the window).

    A trailing remainder shorter than the window is handled by the caller via
    padding; a trace shorter than one window is an error.
    """
    if n_epochs < window:
        raise TraceFormatError(
            f"trace has {n_epochs} epochs, shorter than one window of {window}")
    return list(range(0, n_epochs - window + 1, window)) + (
        [n_epochs - n_epochs % window] if n_epochs % window else [])
