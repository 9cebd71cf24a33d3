"""Learned-fusion stage: per-epoch covariance modification plus a bounded
additive correction applied inside the two-filter fusion.

A correction provider supplies, for every epoch, two full-rank modification
matrices and a correction vector. The modification matrices reshape the
forward and backward covariances by congruence (which preserves positive
definiteness), the fusion then runs exactly like the classical two-filter
smoother on the modified covariances, and the correction vector is added to
the fused error state. The fused covariance gains the correction's outer
product, accounting for the uncertainty the additive term introduces.

With identity modifications and a zero correction the pipeline reduces to
the classical smoother bit-for-bit: that path skips the modification algebra
entirely and calls the same fusion helper the classical smoother uses.
"""

from __future__ import annotations

import numpy as np

from .backward_info import BackwardResult
from .errors import ArgumentError, ProviderError
from .forward_ekf import FilterTrace
from .geodesy import ned_units_per_state
from .linalg import (
    N_STATE,
    _SCALE,
    _from_balanced,
    _to_balanced,
    fuse_information,
    symmetrize,
)
from .smoothers import SmoothedTrajectory, _empty_output, _store_epoch
from .strapdown import apply_error_state
from .types import BoundSchedule, CorrectionRecord

__all__ = [
    "CorrectionProvider",
    "ZeroProvider",
    "OracleProvider",
    "FileProvider",
    "assemble_input_row",
    "modify_covariances",
    "bounded_correction",
    "blends_fuse_epoch",
    "run_blends",
]

NET_INPUT_DIM = 480

_EYE = np.eye(N_STATE)


class CorrectionProvider:
    """Interface: yield a correction record for an epoch.

    ``u`` is the assembled 480-dimensional input row for the epoch; in-core
    providers may ignore it.
    """

    def correction(self, k: int, t: float, u: np.ndarray) -> CorrectionRecord:
        raise NotImplementedError


class ZeroProvider(CorrectionProvider):
    """Identity modifications, zero correction: reduces fusion to classic TFS."""

    def correction(self, k: int, t: float, u: np.ndarray) -> CorrectionRecord:
        return CorrectionRecord(t=t, d_f=_EYE.copy(), d_b=_EYE.copy(), c=np.zeros(N_STATE))


class OracleProvider(CorrectionProvider):
    """Correction equal to a known systematic NED offset, in state units.

    Test fixture: converts the injected measurement bias to per-epoch state
    units at the trace's nominal position, so the fused output lands on the
    unbiased trajectory. Modification matrices stay identity.
    """

    def __init__(self, trace: FilterTrace, bias_ned):
        self._trace = trace
        self._bias = np.asarray(bias_ned, dtype=float)
        if self._bias.shape != (3,):
            raise ArgumentError("bias_ned must be a 3-vector")

    def correction(self, k: int, t: float, u: np.ndarray) -> CorrectionRecord:
        lat, _, alt = self._trace.pos_geo[k]
        c = np.zeros(N_STATE)
        c[0:3] = self._bias / ned_units_per_state(lat, alt)
        return CorrectionRecord(t=t, d_f=_EYE.copy(), d_b=_EYE.copy(), c=c)


class FileProvider(CorrectionProvider):
    """Serves records read from a correction-record file, by epoch index."""

    def __init__(self, records: list[CorrectionRecord], times: np.ndarray | None = None,
                 time_tol: float = 5e-3):
        self._records = records
        self._time_tol = time_tol

    def correction(self, k: int, t: float, u: np.ndarray) -> CorrectionRecord:
        if k >= len(self._records):
            raise ProviderError(f"no correction record for epoch {k}", epoch=k)
        rec = self._records[k]
        if abs(rec.t - t) > self._time_tol:
            raise ProviderError(
                f"record time {rec.t} does not match epoch time {t}", epoch=k)
        return rec


def assemble_input_row(trace: FilterTrace, backward: BackwardResult, k: int) -> np.ndarray:
    """Per-epoch network input: forward and backward error states followed by
    the column-major flattened forward and backward covariances."""
    return np.concatenate([
        trace.dx[k],
        backward.dx_b[k],
        trace.p_plus[k].ravel(order="F"),
        backward.p_b[k].ravel(order="F"),
    ])


def modify_covariances(p_f, p_b, rec: CorrectionRecord) -> tuple[np.ndarray, np.ndarray]:
    """Congruence-reshape both covariances; positive definiteness survives
    because the modification matrices are full rank."""
    rec.validate()
    p_f_mod = symmetrize(rec.d_f @ np.asarray(p_f, dtype=float) @ rec.d_f.T)
    p_b_mod = symmetrize(rec.d_b @ np.asarray(p_b, dtype=float) @ rec.d_b.T)
    return p_f_mod, p_b_mod


def bounded_correction(c_hat, schedule: BoundSchedule, epoch: float) -> np.ndarray:
    """Squash a raw correction through tanh and the epoch's bound vector.

    Every component satisfies |c_i| < m_i strictly (tanh never reaches 1)."""
    m = schedule.bounds(epoch)
    return np.tanh(np.asarray(c_hat, dtype=float)) * m


def blends_fuse_epoch(dx_f, p_f_mod, dx_b, p_b_mod, c) -> tuple[np.ndarray, np.ndarray]:
    """Fuse one epoch with already-modified covariances and append the
    correction; the fused covariance gains the correction outer product."""
    from .linalg import inv_spd

    info_b = inv_spd(np.asarray(p_b_mod, dtype=float))
    s_b = info_b @ np.asarray(dx_b, dtype=float)
    p_base, dx_base = fuse_information(p_f_mod, info_b, s_b, dx_f=np.asarray(dx_f, dtype=float))
    c = np.asarray(c, dtype=float)
    return dx_base + c, p_base + np.outer(c, c)


def _is_identity_record(rec: CorrectionRecord) -> bool:
    return (rec.d_f == _EYE).all() and (rec.d_b == _EYE).all()


def run_blends(trace: FilterTrace, backward: BackwardResult, provider: CorrectionProvider,
               schedule: BoundSchedule | None = None) -> SmoothedTrajectory:
    """Run the learned fusion over all epochs.

    Per epoch: assemble the input row, obtain a record, reshape covariances,
    fuse in information form, add the correction, and recover the full state
    from the stored nominal. With ``schedule`` given, corrections are checked
    against the widest bound vector (records may come from any training
    stage, so the loosest bound is the sound envelope).
    """
    n = len(trace)
    if len(backward) != n or np.abs(trace.t - backward.t).max() > 1e-9:
        raise ArgumentError("forward trace and backward results are not epoch-aligned")

    out = _empty_output(trace)
    w = _SCALE
    for k in range(n):
        u = assemble_input_row(trace, backward, k)
        try:
            rec = provider.correction(k, float(trace.t[k]), u)
        except ProviderError:
            raise
        except Exception as exc:
            raise ProviderError(f"correction provider failed: {exc}", epoch=k) from exc
        if schedule is not None and (np.abs(rec.c) > schedule.m_wide).any():
            raise ProviderError("correction exceeds the widest schedule bound", epoch=k)

        identity = _is_identity_record(rec)
        if not identity:
            rec.validate()

        if identity:
            if backward.no_info[k]:
                p_base = trace.p_plus[k].copy()
                dx_base = np.zeros(N_STATE)
            else:
                p_base, dx_base = fuse_information(trace.p_plus[k], backward.info[k],
                                                   backward.s[k])
        else:
            pf_mod = symmetrize(rec.d_f @ trace.p_plus[k] @ rec.d_f.T)
            pf_bal = _to_balanced(pf_mod)
            db_bal = w[:, None] * rec.d_b * (1.0 / w)[None, :]
            ib_bal = _from_balanced(backward.info[k])
            # D_b^-T I D_b^-1 via two triangular-free solves
            y = np.linalg.solve(db_bal.T, ib_bal)
            ib_mod = symmetrize(np.linalg.solve(db_bal.T, y.T).T)
            sb_mod = ib_mod @ (backward.dx_b[k] * w)
            try:
                if_bal = symmetrize(np.linalg.inv(pf_bal))
                ps_bal = symmetrize(np.linalg.inv(if_bal + ib_mod))
            except np.linalg.LinAlgError as exc:
                raise ProviderError("singular combined information", epoch=k) from exc
            p_base = _from_balanced(ps_bal)
            dx_base = (ps_bal @ sb_mod) / w

        dx_s = dx_base + rec.c
        p_s = p_base + np.outer(rec.c, rec.c)
        _store_epoch(out, k, apply_error_state(trace.nominal(k), dx_s), dx_s, p_s)
    return out
