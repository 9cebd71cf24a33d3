"""Evaluation metrics: RMSE, covariance-improvement series, sigma coverage.

Position errors are evaluated in local NED meters relative to the truth, so
numbers are comparable across estimators regardless of the radian-based
internal state.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError
from .geodesy import ned_units_per_state
from .linalg import euler_from_rot

__all__ = ["rmse", "pci", "sigma_coverage", "nav_errors"]


def rmse(errors) -> dict:
    """Per-axis and vector-norm root-mean-square error.

    ``errors`` is (N,) or (N, m). Returns {"axes": (m,), "norm": float}.
    """
    arr = np.asarray(errors, dtype=float)
    if arr.size == 0:
        raise ArgumentError("empty error sequence")
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ArgumentError("errors must be 1- or 2-dimensional")
    per_axis = np.sqrt(np.mean(arr**2, axis=0))
    norm = float(np.sqrt(np.mean(np.sum(arr**2, axis=1))))
    return {"axes": per_axis, "norm": norm}


def _trace_series(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 3:
        return np.trace(arr, axis1=1, axis2=2)
    if arr.ndim == 1:
        return arr
    raise ArgumentError("covariance series must be (N,) traces or (N, d, d) matrices")


def pci(p_ref, p_test) -> np.ndarray:
    """Percent covariance improvement of ``p_test`` over ``p_ref``, per epoch:
    100 * (tr(ref) - tr(test)) / tr(ref)."""
    tr_ref = _trace_series(p_ref)
    tr_test = _trace_series(p_test)
    if tr_ref.shape != tr_test.shape:
        raise ArgumentError("covariance sequences must be aligned")
    if (tr_ref <= 0).any():
        raise ArgumentError("reference covariance trace must be positive")
    return 100.0 * (tr_ref - tr_test) / tr_ref


def sigma_coverage(errors, variances, k: float = 2.0) -> float:
    """Fraction of epochs with |error| <= k * sqrt(variance) (inclusive)."""
    e = np.asarray(errors, dtype=float)
    v = np.asarray(variances, dtype=float)
    if e.shape != v.shape or e.ndim != 1:
        raise ArgumentError("errors and variances must be aligned 1-d sequences")
    if (v <= 0).any():
        raise ArgumentError("variances must be positive")
    return float(np.mean(np.abs(e) <= k * np.sqrt(v)))


def nav_errors(est_pos_geo, est_vel, est_att, truth_pos_geo, truth_vel, truth_att) -> dict:
    """Per-epoch navigation errors against truth.

    Returns arrays: ``pos_ned`` (N,3) meters, ``vel`` (N,3) m/s, ``euler``
    (N,3) rad with angle differences wrapped to (-pi, pi].
    """
    est_pos_geo = np.asarray(est_pos_geo, dtype=float)
    truth_pos_geo = np.asarray(truth_pos_geo, dtype=float)
    n = len(est_pos_geo)
    if len(truth_pos_geo) != n:
        raise ArgumentError("estimate and truth must be aligned")

    pos_err = np.zeros((n, 3))
    for k in range(n):
        lat, _, alt = truth_pos_geo[k]
        units = ned_units_per_state(lat, alt)
        pos_err[k] = (est_pos_geo[k] - truth_pos_geo[k]) * units

    vel_err = np.asarray(est_vel, dtype=float) - np.asarray(truth_vel, dtype=float)

    eul_err = np.zeros((n, 3))
    for k in range(n):
        e_est = np.array(euler_from_rot(est_att[k]))
        e_tru = np.array(euler_from_rot(truth_att[k]))
        d = e_est - e_tru
        eul_err[k] = (d + np.pi) % (2 * np.pi) - np.pi
    return {"pos_ned": pos_err, "vel": vel_err, "euler": eul_err}
