"""Backward information filter over the recorded measurement set.

Runs in reverse time from a zero information matrix (infinite uncertainty),
so the backward estimates carry no prior from the forward filter: only the
stored transitions, process noise, residuals and measurement covariances
enter the statistics. Per epoch it stores the information pair describing
what all *future* measurements say about the error of the stored nominal at
that epoch, which is exactly the factor the two-filter smoother multiplies
with the forward posterior.

Reference-frame bookkeeping: the forward pass folds each update into its
nominal, so the stored nominal trajectory has a known jump at every update
epoch (the stored correction vector). The stored residuals were measured
against the pre-correction nominal. When the backward recursion crosses an
update epoch it therefore re-expresses its quadratic form across that known
jump before absorbing the measurement. Without this step the backward state
would refer to a trajectory that drifts away from the stored nominal by the
accumulated corrections, and the fused output would be meaningless. The
jumps are deterministic bookkeeping, not statistical information: the
backward covariance never sees a forward covariance or gain.

All recursions run in balanced units (see :mod:`navsmooth.linalg`) because
the raw information matrices span the squared unit spread of the state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, NumericalError
from .forward_ekf import H_POS
from .linalg import (
    COV_JITTER,
    N_STATE,
    _from_balanced,
    _to_balanced,
    _SCALE,
    _INV_SCALE,
    symmetrize,
)
from .types import BackwardInfo

__all__ = ["BackwardResult", "init_backward", "backward_update", "backward_propagate", "run_backward"]


def init_backward() -> BackwardInfo:
    """No-prior start: zero information matrix and zero information vector."""
    return BackwardInfo(info=np.zeros((N_STATE, N_STATE)), s=np.zeros(N_STATE))


def backward_update(info: BackwardInfo, dz, h, r_diag, dx_b_minus=None) -> BackwardInfo:
    """Absorb one measurement into the information pair.

    ``dz`` and ``r_diag`` are in state units. If ``dx_b_minus`` is given, the
    information vector is rebuilt from it (equivalent to updating the stored
    vector whenever the pair is consistent); otherwise the stored vector is
    updated in place, which also covers the singular early epochs.
    """
    h = np.asarray(h, dtype=float)
    r = np.asarray(r_diag, dtype=float)
    if (r <= 0).any():
        raise NumericalError("measurement variances must be positive")
    hr = h.T / r                      # H^T R^-1 for diagonal R
    gain_info = hr @ h
    s_prev = info.info @ np.asarray(dx_b_minus, dtype=float) if dx_b_minus is not None else info.s
    return BackwardInfo(info=symmetrize(info.info + gain_info), s=s_prev + hr @ dz)


def backward_propagate(info: BackwardInfo, phi, q_b) -> BackwardInfo:
    """Propagate the information pair one step back through the dynamics.

    Information form of: covariance picks up ``q_b`` and is carried through
    the inverse transition; the state is carried through the inverse
    transition. Well defined for singular information (including zero).
    """
    phi_b = _SCALE[:, None] * np.asarray(phi, dtype=float) * _INV_SCALE[None, :]
    q_bal = _to_balanced(np.asarray(q_b, dtype=float))
    i_bal = _from_balanced(info.info)
    s_bal = info.s * _INV_SCALE

    a = np.eye(N_STATE) + i_bal @ q_bal
    try:
        m = np.linalg.solve(a, i_bal)
        s_new = phi_b.T @ np.linalg.solve(a, s_bal)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("backward propagation solve failed") from exc
    i_new = symmetrize(phi_b.T @ m @ phi_b)
    return BackwardInfo(info=_info_to_raw(i_new), s=s_new * _SCALE)


def _info_to_raw(i_bal: np.ndarray) -> np.ndarray:
    """Balanced information matrix to raw units (information scales as the
    inverse covariance, so raw = balanced * outer(scale, scale))."""
    return i_bal * np.outer(_SCALE, _SCALE)


@dataclass
class BackwardResult:
    """Per-epoch backward quantities aligned with the forward epochs.

    ``info``/``s`` hold, for each epoch k, the information pair from strictly
    future measurements about the stored-nominal error at k. ``no_info``
    marks epochs whose position block is not yet positive definite (the tail
    after the last fix); their recovered state and covariance are zero-filled
    and they must fall back to the forward estimate in fusion.
    """

    t: np.ndarray
    info: np.ndarray           # (N, 15, 15)
    s: np.ndarray              # (N, 15)
    dx_b: np.ndarray           # (N, 15) regularized recovery, zeros when flagged
    p_b: np.ndarray            # (N, 15, 15) regularized recovery, zeros when flagged
    no_info: np.ndarray        # (N,) bool

    def __len__(self) -> int:
        return len(self.t)


def _position_block_pd(i_bal: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(i_bal[0:3, 0:3])
        return True
    except np.linalg.LinAlgError:
        return False


def run_backward(t, phi, qd, update_flag, dz, r_state, corrections, h=None,
                 jitter: float = COV_JITTER) -> BackwardResult:
    """Run the backward pass over a recorded forward trace.

    Parameters
    ----------
    t, phi, qd, update_flag, dz, r_state:
        Per-epoch sequences from the forward record; ``phi[k]``/``qd[k]``
        describe the k-1 -> k transition and ``dz``/``r_state`` the applied
        residuals in state units.
    corrections:
        Per-epoch folded-in correction vectors (zero at non-update epochs),
        used only to re-express the quadratic form across the nominal's
        correction jumps.
    """
    t = np.asarray(t, dtype=float)
    n = len(t)
    phi = np.asarray(phi, dtype=float)
    qd = np.asarray(qd, dtype=float)
    update_flag = np.asarray(update_flag, dtype=bool)
    dz = np.asarray(dz, dtype=float)
    r_state = np.asarray(r_state, dtype=float)
    corrections = np.asarray(corrections, dtype=float)
    for name, arr, shape in (("phi", phi, (n, N_STATE, N_STATE)),
                             ("qd", qd, (n, N_STATE, N_STATE)),
                             ("update_flag", update_flag, (n,)),
                             ("dz", dz, (n, 3)),
                             ("r_state", r_state, (n, 3)),
                             ("corrections", corrections, (n, N_STATE))):
        if arr.shape != shape:
            raise ArgumentError(f"{name} has shape {arr.shape}, expected {shape}")
    h = H_POS if h is None else np.asarray(h, dtype=float)

    # balanced versions of all inputs
    w = _SCALE
    phi_b = w[None, :, None] * phi * (1.0 / w)[None, None, :]
    qd_b = qd * np.outer(w, w)[None, :, :]
    w3 = w[0:3]
    dz_b = dz * w3[None, :]
    r_b = r_state * (w3**2)[None, :]
    d_b = corrections * w[None, :]
    h_b = h    # position selector is scale-aligned

    result = BackwardResult(
        t=t,
        info=np.zeros((n, N_STATE, N_STATE)),
        s=np.zeros((n, N_STATE)),
        dx_b=np.zeros((n, N_STATE)),
        p_b=np.zeros((n, N_STATE, N_STATE)),
        no_info=np.ones(n, dtype=bool),
    )

    eye = np.eye(N_STATE)
    i_cur = np.zeros((N_STATE, N_STATE))
    s_cur = np.zeros(N_STATE)

    for k in range(n - 1, -1, -1):
        # store the future-only pair for epoch k
        flagged = not _position_block_pd(i_cur)
        result.no_info[k] = flagged
        result.info[k] = _info_to_raw(i_cur)
        result.s[k] = s_cur * w
        if not flagged:
            reg = i_cur + jitter * eye
            try:
                dxb = np.linalg.solve(reg, s_cur)
                pb = symmetrize(np.linalg.inv(reg))
            except np.linalg.LinAlgError as exc:
                raise NumericalError(f"backward state recovery failed at epoch {k}") from exc
            result.dx_b[k] = dxb * (1.0 / w)
            result.p_b[k] = pb / np.outer(w, w)

        if k == 0:
            break

        if update_flag[k]:
            # cross the nominal's correction jump, then absorb the measurement
            s_cur = s_cur + i_cur @ d_b[k]
            hr = h_b.T / r_b[k]
            i_cur = symmetrize(i_cur + hr @ h_b)
            s_cur = s_cur + hr @ dz_b[k]

        # propagate k -> k-1 through the inverse transition
        pk = phi_b[k]
        try:
            pk_inv_q = np.linalg.solve(pk, np.linalg.solve(pk, qd_b[k]).T).T
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"transition matrix singular at epoch {k}") from exc
        q_b = symmetrize(pk_inv_q)
        a = eye + i_cur @ q_b
        try:
            m = np.linalg.solve(a, i_cur)
            s_cur = pk.T @ np.linalg.solve(a, s_cur)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"backward propagation failed at epoch {k}") from exc
        i_cur = symmetrize(pk.T @ m @ pk)

    return result
