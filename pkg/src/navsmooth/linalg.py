"""Rotation and covariance linear algebra for the 15-state error model.

The error state mixes radians (horizontal position), meters, m/s and rad/s,
so raw 15x15 covariances span ~15 orders of magnitude and are numerically
hostile to inversion. All information-form operations here first rebalance
the state with a fixed unit scaling (horizontal position rad -> m), operate
in the balanced space, and map back. The scaling is a constant congruence,
so results are algebraically identical to the unscaled formulas.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError
from .geodesy import WGS84_A

N_STATE = 15

# error-state slot layout: fixed everywhere
POS = slice(0, 3)      # dlat [rad], dlon [rad], dalt [m]
VEL = slice(3, 6)      # NED velocity error [m/s]
ATT = slice(6, 9)      # misalignment angles [rad]
BA = slice(9, 12)      # accelerometer bias error [m/s^2]
BG = slice(12, 15)     # gyroscope bias error [rad/s]

# balanced-units weights: horizontal position rad -> ~meters; other slots kept
_SCALE = np.ones(N_STATE)
_SCALE[0] = WGS84_A
_SCALE[1] = WGS84_A
_INV_SCALE = 1.0 / _SCALE

# default diagonal jitter applied in balanced units when PD is violated
COV_JITTER = 1e-12


def skew(v) -> np.ndarray:
    """3x3 cross-product matrix."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def exp_so3(phi) -> np.ndarray:
    """Rotation matrix for a rotation vector (Rodrigues formula)."""
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi)
    s = skew(phi)
    if angle < 1e-12:
        return np.eye(3) + s + 0.5 * (s @ s)
    a = np.sin(angle) / angle
    b = (1.0 - np.cos(angle)) / angle**2
    return np.eye(3) + a * s + b * (s @ s)


def log_so3(rot) -> np.ndarray:
    """Rotation vector of a rotation matrix (inverse of :func:`exp_so3`).

    Extracted through the quaternion, which stays well conditioned at every
    angle including the half-turn where the trace-based formula degenerates.
    """
    quat = quat_from_rot(rot)
    vec = quat[1:]
    norm = np.linalg.norm(vec)
    if norm < 1e-300:
        return np.zeros(3)
    return (2.0 * np.arctan2(norm, quat[0]) / norm) * vec


def orthonormalize(rot) -> np.ndarray:
    """One Newton step pulling a near-rotation matrix back onto SO(3)."""
    return rot @ (1.5 * np.eye(3) - 0.5 * (rot.T @ rot))


def quat_from_rot(rot) -> np.ndarray:
    """Scalar-first unit quaternion from a rotation matrix."""
    m = np.asarray(rot, dtype=float)
    t = np.trace(m)
    if t > 0:
        r = np.sqrt(1.0 + t)
        w = 0.5 * r
        x = (m[2, 1] - m[1, 2]) / (2.0 * r)
        y = (m[0, 2] - m[2, 0]) / (2.0 * r)
        z = (m[1, 0] - m[0, 1]) / (2.0 * r)
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        r = np.sqrt(1.0 + m[i, i] - m[j, j] - m[k, k])
        q = np.empty(3)
        q[i] = 0.5 * r
        q[j] = (m[j, i] + m[i, j]) / (2.0 * r)
        q[k] = (m[k, i] + m[i, k]) / (2.0 * r)
        w = (m[k, j] - m[j, k]) / (2.0 * r)
        x, y, z = q
    quat = np.array([w, x, y, z])
    if quat[0] < 0:
        quat = -quat
    return quat / np.linalg.norm(quat)


def rot_from_quat(quat) -> np.ndarray:
    """Rotation matrix from a scalar-first unit quaternion."""
    w, x, y, z = np.asarray(quat, dtype=float) / np.linalg.norm(quat)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def euler_from_rot(rot) -> tuple[float, float, float]:
    """(roll, pitch, yaw) of a body->NED rotation matrix."""
    pitch = -np.arcsin(np.clip(rot[2, 0], -1.0, 1.0))
    roll = np.arctan2(rot[2, 1], rot[2, 2])
    yaw = np.arctan2(rot[1, 0], rot[0, 0])
    return roll, pitch, yaw


def rot_from_euler(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Body->NED rotation matrix from (roll, pitch, yaw)."""
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def _to_balanced(mat: np.ndarray) -> np.ndarray:
    return mat * np.outer(_SCALE, _SCALE)


def _from_balanced(mat: np.ndarray) -> np.ndarray:
    return mat * np.outer(_INV_SCALE, _INV_SCALE)


def symmetrize(mat: np.ndarray) -> np.ndarray:
    """Exactly symmetric average of a matrix and its transpose."""
    return 0.5 * (mat + mat.T)


def symmetrize_and_condition(cov: np.ndarray) -> np.ndarray:
    """Symmetrize a covariance and restore positive definiteness if lost.

    The PD check and the diagonal jitter run in balanced units so the tiny
    radian-squared horizontal entries get a proportionate floor rather than
    being flooded by a meter-scale constant.

    Raises
    ------
    NumericalError
        If the input contains non-finite entries.
    """
    cov = np.asarray(cov, dtype=float)
    if not np.isfinite(cov).all():
        raise NumericalError("covariance contains non-finite entries")
    sym = symmetrize(cov)
    if sym.shape == (N_STATE, N_STATE):
        bal = _to_balanced(sym)
    else:
        bal = sym
    try:
        np.linalg.cholesky(bal)
        return sym
    except np.linalg.LinAlgError:
        pass
    bal = bal + COV_JITTER * np.eye(bal.shape[0])
    while True:
        try:
            np.linalg.cholesky(bal)
            break
        except np.linalg.LinAlgError:
            bal = bal + 10.0 * COV_JITTER * np.eye(bal.shape[0])
    return _from_balanced(bal) if sym.shape == (N_STATE, N_STATE) else bal


def inv_spd(cov: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite 15x15 state covariance.

    Computed in balanced units; the result is exactly symmetric.
    """
    bal = _to_balanced(np.asarray(cov, dtype=float))
    try:
        inv = np.linalg.inv(bal)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular covariance") from exc
    if not np.isfinite(inv).all():
        raise NumericalError("covariance inversion produced non-finite values")
    return symmetrize(_to_balanced(inv))


def inv_info(info: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite information matrix."""
    bal = _from_balanced(np.asarray(info, dtype=float))
    try:
        inv = np.linalg.inv(bal)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular information matrix") from exc
    if not np.isfinite(inv).all():
        raise NumericalError("information inversion produced non-finite values")
    return symmetrize(_from_balanced(inv))


def solve_info(info: np.ndarray, vec: np.ndarray, jitter: float = COV_JITTER) -> np.ndarray:
    """Regularized solve of ``info @ x = vec`` for a PSD information matrix.

    The jitter is added in balanced units, which keeps the regularization
    proportionate across slots of wildly different physical scale.
    """
    bal = _from_balanced(np.asarray(info, dtype=float))
    rhs = np.asarray(vec, dtype=float) * _INV_SCALE
    try:
        x = np.linalg.solve(bal + jitter * np.eye(N_STATE), rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("regularized information solve failed") from exc
    return x * _INV_SCALE


def fuse_information(p_f: np.ndarray, info_b: np.ndarray, s_b: np.ndarray,
                     dx_f: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Combine a forward covariance with backward information additively.

    Returns the fused covariance ``p_s = (p_f^-1 + info_b)^-1`` and the fused
    state ``dx_s = p_s @ (p_f^-1 dx_f + s_b)``; ``dx_f`` defaults to zero,
    which is the reset-filter case. Both the classical and the learned fusion
    route through this helper so the learned path with identity modifications
    reduces to the classical one exactly.
    """
    pf_bal = _to_balanced(np.asarray(p_f, dtype=float))
    ib_bal = _from_balanced(np.asarray(info_b, dtype=float))
    rhs = np.asarray(s_b, dtype=float) * _INV_SCALE
    try:
        if_bal = symmetrize(np.linalg.inv(pf_bal))
        ps_bal = symmetrize(np.linalg.inv(if_bal + ib_bal))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular matrix in information fusion") from exc
    if not np.isfinite(ps_bal).all():
        raise NumericalError("information fusion produced non-finite values")
    if dx_f is not None:
        rhs = rhs + if_bal @ (np.asarray(dx_f, dtype=float) * _SCALE)
    p_s = _from_balanced(ps_bal)
    dx_s = (ps_bal @ rhs) * _INV_SCALE
    return p_s, dx_s


def is_symmetric(mat: np.ndarray, rtol: float = 1e-10) -> bool:
    scale = max(np.abs(mat).max(), 1e-300)
    return bool(np.abs(mat - mat.T).max() <= rtol * scale)


def min_eig_balanced(cov: np.ndarray) -> float:
    """Smallest eigenvalue of a state covariance in balanced units."""
    mat = np.asarray(cov, dtype=float)
    if mat.shape == (N_STATE, N_STATE):
        mat = _to_balanced(mat)
    return float(np.linalg.eigvalsh(symmetrize(mat)).min())
