"""Fixed-interval smoothers over a recorded forward pass.

Two equivalent routes to the smoothed posterior:

* Two-filter smoothing fuses the forward posterior with the independent
  backward information pair by adding information per epoch. Because the
  forward error estimate is reset to zero each epoch, the nominal carries
  the forward mean and the fused increment is driven entirely by the
  backward information vector.
* The fixed-interval backward recursion reuses the stored forward
  covariances and transitions; its per-epoch output is the smoothed error
  relative to the pre-correction nominal, so recovering the full state from
  the stored post-correction nominal subtracts the already-applied
  correction first.

Both produce the smoothed error relative to the stored nominal and the
smoothed covariance; in the linear-Gaussian regime they agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backward_info import BackwardResult
from .errors import ArgumentError, NumericalError
from .forward_ekf import FilterTrace
from .linalg import (
    N_STATE,
    _INV_SCALE,
    _SCALE,
    _from_balanced,
    _to_balanced,
    fuse_information,
    inv_spd,
    symmetrize,
    symmetrize_and_condition,
)
from .strapdown import apply_error_state
from .types import NominalState

__all__ = [
    "SmoothedEpoch",
    "SmoothedTrajectory",
    "tfs_fuse_epoch",
    "tfs_full_state_fuse",
    "fusion_gains",
    "tfs_smooth",
    "rtss_smooth",
]


@dataclass(frozen=True)
class SmoothedEpoch:
    """One smoothed epoch: full state, error relative to the stored nominal,
    and smoothed covariance."""

    t: float
    x_s: NominalState
    dx_s: np.ndarray
    p_s: np.ndarray


@dataclass
class SmoothedTrajectory:
    """Smoothed output aligned with the forward epochs (structure of arrays)."""

    t: np.ndarray
    pos_geo: np.ndarray
    vel_ned: np.ndarray
    att: np.ndarray
    b_a: np.ndarray
    b_g: np.ndarray
    dx_s: np.ndarray
    p_s: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def epoch(self, k: int) -> SmoothedEpoch:
        state = NominalState(pos_geo=tuple(self.pos_geo[k]), vel_ned=self.vel_ned[k],
                             att=self.att[k], b_a=self.b_a[k], b_g=self.b_g[k])
        return SmoothedEpoch(t=float(self.t[k]), x_s=state, dx_s=self.dx_s[k], p_s=self.p_s[k])

    def __getitem__(self, k: int) -> SmoothedEpoch:
        return self.epoch(k)


def _empty_output(trace: FilterTrace) -> SmoothedTrajectory:
    n = len(trace)
    return SmoothedTrajectory(
        t=trace.t.copy(),
        pos_geo=np.zeros((n, 3)),
        vel_ned=np.zeros((n, 3)),
        att=np.zeros((n, 3, 3)),
        b_a=np.zeros((n, 3)),
        b_g=np.zeros((n, 3)),
        dx_s=np.zeros((n, N_STATE)),
        p_s=np.zeros((n, N_STATE, N_STATE)),
    )


def _store_epoch(out: SmoothedTrajectory, k: int, state: NominalState,
                 dx_s: np.ndarray, p_s: np.ndarray) -> None:
    out.pos_geo[k] = state.pos_geo
    out.vel_ned[k] = state.vel_ned
    out.att[k] = state.att
    out.b_a[k] = state.b_a
    out.b_g[k] = state.b_g
    out.dx_s[k] = dx_s
    out.p_s[k] = p_s


def fusion_gains(p_f: np.ndarray, info_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Optimal fusion gains (k_f, k_b) with k_f + k_b = I.

    Computed as k_f = (I + p_f info_b)^-1, which stays well defined when the
    backward information is singular or zero (k_f -> I).
    """
    pf_bal = _to_balanced(np.asarray(p_f, dtype=float))
    ib_bal = _from_balanced(np.asarray(info_b, dtype=float))
    try:
        kf_bal = np.linalg.inv(np.eye(N_STATE) + pf_bal @ ib_bal)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular gain computation") from exc
    k_f = _SCALE[:, None] ** -1 * kf_bal * _SCALE[None, :]
    return k_f, np.eye(N_STATE) - k_f


def tfs_fuse_epoch(dx_f, p_f, dx_b, p_b=None, info_b=None) -> tuple[np.ndarray, np.ndarray]:
    """Fuse one epoch of forward and backward estimates.

    Provide the backward second moment either as a covariance ``p_b`` or as
    an information matrix ``info_b`` (zero allowed). Returns (dx_s, p_s).
    """
    if (p_b is None) == (info_b is None):
        raise ArgumentError("provide exactly one of p_b or info_b")
    if info_b is None:
        info_b = inv_spd(np.asarray(p_b, dtype=float))
    dx_b = np.zeros(N_STATE) if dx_b is None else np.asarray(dx_b, dtype=float)
    s_b = info_b @ dx_b
    p_s, dx_s = fuse_information(p_f, info_b, s_b, dx_f=np.asarray(dx_f, dtype=float))
    return dx_s, p_s


def tfs_full_state_fuse(x_f, x_b, p_f, p_b) -> np.ndarray:
    """Information-weighted full-state fusion.

    Exists to verify that fusing full states and fusing error states around a
    shared nominal give the same answer; production paths use the error form.
    """
    x_f = np.asarray(x_f, dtype=float) * _SCALE
    x_b = np.asarray(x_b, dtype=float) * _SCALE
    if_bal = np.linalg.inv(_to_balanced(np.asarray(p_f, dtype=float)))
    ib_bal = np.linalg.inv(_to_balanced(np.asarray(p_b, dtype=float)))
    try:
        ps_bal = np.linalg.inv(symmetrize(if_bal) + symmetrize(ib_bal))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular combined information") from exc
    return (ps_bal @ (if_bal @ x_f + ib_bal @ x_b)) * _INV_SCALE


def tfs_smooth(trace: FilterTrace, backward: BackwardResult) -> SmoothedTrajectory:
    """Per-epoch information fusion of the forward trace with the backward pass.

    Epochs with no backward information fall back to the forward estimate
    exactly (their fused covariance is the forward covariance).
    """
    n = len(trace)
    if len(backward) != n or np.abs(trace.t - backward.t).max() > 1e-9:
        raise ArgumentError("forward trace and backward results are not epoch-aligned")

    out = _empty_output(trace)
    for k in range(n):
        nominal = trace.nominal(k)
        if backward.no_info[k]:
            dx_s = np.zeros(N_STATE)
            p_s = trace.p_plus[k].copy()
        else:
            p_s, dx_s = fuse_information(trace.p_plus[k], backward.info[k], backward.s[k])
        _store_epoch(out, k, apply_error_state(nominal, dx_s), dx_s, p_s)
    return out


def rtss_smooth(trace: FilterTrace) -> SmoothedTrajectory:
    """Backward fixed-interval recursion over the stored forward pass.

    Initialized at the last epoch with the forward posterior; the stored
    pre-update error estimate is zero under per-epoch resets, so the
    recursion simplifies accordingly. Gains are computed in balanced units.
    """
    n = len(trace)
    if n == 0:
        raise ArgumentError("empty trace")

    out = _empty_output(trace)
    w = _SCALE

    dx_s = trace.dx[n - 1].copy()
    p_s = trace.p_plus[n - 1].copy()
    _store_epoch(out, n - 1, trace.nominal(n - 1), np.zeros(N_STATE), p_s)

    dxs_bal = dx_s * w
    ps_bal = _to_balanced(p_s)

    for k in range(n - 2, -1, -1):
        phi_b = w[:, None] * trace.phi[k + 1] * (1.0 / w)[None, :]
        pm_bal = _to_balanced(trace.p_minus[k + 1])
        pp_bal = _to_balanced(trace.p_plus[k])
        try:
            gain = np.linalg.solve(pm_bal.T, (pp_bal @ phi_b.T).T).T
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular predicted covariance at epoch {k + 1}") from exc

        dxs_bal = trace.dx[k] * w + gain @ dxs_bal
        ps_bal = symmetrize(pp_bal + gain @ (ps_bal - pm_bal) @ gain.T)

        # residual relative to the stored (post-correction) nominal
        resid = dxs_bal * (1.0 / w) - trace.dx[k]
        p_s = symmetrize_and_condition(_from_balanced(ps_bal))
        _store_epoch(out, k, apply_error_state(trace.nominal(k), resid), resid, p_s)
    return out
