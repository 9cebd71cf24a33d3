"""Shared domain types for the INS/GNSS smoothing toolkit.

All types are immutable value objects; arrays they hold are treated as
read-only by convention. The 15-dimensional error state is an ndarray with
the fixed slot layout defined in :mod:`navsmooth.linalg`:

    [0:3]   position error   (dlat [rad], dlon [rad], dalt [m])
    [3:6]   velocity error   (NED, [m/s])
    [6:9]   misalignment     ([rad])
    [9:12]  accel bias error ([m/s^2])
    [12:15] gyro bias error  ([rad/s])
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError
from .linalg import ATT, BA, BG, N_STATE, POS, VEL, is_symmetric, min_eig_balanced

__all__ = [
    "ImuSample",
    "GnssFix",
    "NominalState",
    "BackwardInfo",
    "CorrectionRecord",
    "BoundSchedule",
    "pack_error_state",
    "unpack_error_state",
    "validate_error_state",
    "validate_cov",
]


def _vec3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ArgumentError(f"{name} must be a 3-vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ImuSample:
    """One inertial sample: specific force and angular rate in the body frame."""

    t: float
    f_b: np.ndarray          # specific force [m/s^2]
    w_b: np.ndarray          # angular rate [rad/s]

    def __post_init__(self):
        object.__setattr__(self, "f_b", _vec3(self.f_b, "f_b"))
        object.__setattr__(self, "w_b", _vec3(self.w_b, "w_b"))
        if not (np.isfinite(self.t) and np.isfinite(self.f_b).all() and np.isfinite(self.w_b).all()):
            raise ArgumentError("ImuSample components must be finite")


@dataclass(frozen=True)
class GnssFix:
    """A GNSS position solution with per-axis measurement variances [m^2]."""

    t: float
    pos_geo: tuple[float, float, float]   # (lat [rad], lon [rad], alt [m])
    r_diag: np.ndarray                    # (north, east, down) variances [m^2]

    def __post_init__(self):
        object.__setattr__(self, "pos_geo", tuple(float(x) for x in self.pos_geo))
        object.__setattr__(self, "r_diag", _vec3(self.r_diag, "r_diag"))
        if abs(self.pos_geo[0]) > np.pi / 2:
            raise ArgumentError("latitude outside [-pi/2, pi/2]")
        if not (self.r_diag > 0).all():
            raise ArgumentError("r_diag must be positive componentwise")


@dataclass(frozen=True)
class NominalState:
    """Full navigation state: geodetic position, NED velocity, attitude, biases.

    ``att`` is the body->NED rotation matrix. Biases are the current estimates
    of the accelerometer (``b_a``) and gyroscope (``b_g``) biases.
    """

    pos_geo: tuple[float, float, float]
    vel_ned: np.ndarray
    att: np.ndarray
    b_a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    b_g: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "pos_geo", tuple(float(x) for x in self.pos_geo))
        object.__setattr__(self, "vel_ned", _vec3(self.vel_ned, "vel_ned"))
        object.__setattr__(self, "b_a", _vec3(self.b_a, "b_a"))
        object.__setattr__(self, "b_g", _vec3(self.b_g, "b_g"))
        att = np.asarray(self.att, dtype=float)
        if att.shape != (3, 3):
            raise ArgumentError(f"att must be 3x3, got {att.shape}")
        object.__setattr__(self, "att", att)
        if not np.isfinite(self.pos_geo[2]):
            raise ArgumentError("altitude must be finite")

    def validate(self, tol: float = 1e-9) -> None:
        """Check attitude orthonormality and det = +1 within ``tol``."""
        err = np.abs(self.att.T @ self.att - np.eye(3)).max()
        det = np.linalg.det(self.att)
        if err > tol or abs(det - 1.0) > tol:
            raise ArgumentError(
                f"attitude not orthonormal within {tol}: max residual {err:.3e}, det {det:.12f}"
            )

    def with_(self, **kwargs) -> "NominalState":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class BackwardInfo:
    """Information-form backward estimate: matrix and information vector."""

    info: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        info = np.asarray(self.info, dtype=float)
        s = np.asarray(self.s, dtype=float)
        if info.shape != (N_STATE, N_STATE):
            raise ArgumentError(f"info must be {N_STATE}x{N_STATE}")
        if s.shape != (N_STATE,):
            raise ArgumentError(f"s must be a {N_STATE}-vector")
        object.__setattr__(self, "info", info)
        object.__setattr__(self, "s", s)

    def validate(self) -> None:
        if not is_symmetric(self.info):
            raise ArgumentError("information matrix not symmetric")
        if not np.allclose(self.info, 0.0):
            if min_eig_balanced(self.info) < -1e-10 * max(np.abs(self.info).max(), 1.0):
                raise ArgumentError("information matrix not positive semidefinite")


@dataclass(frozen=True)
class CorrectionRecord:
    """Per-epoch learned-fusion output: two modification matrices and a correction."""

    t: float
    d_f: np.ndarray
    d_b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        d_f = np.asarray(self.d_f, dtype=float)
        d_b = np.asarray(self.d_b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if d_f.shape != (N_STATE, N_STATE) or d_b.shape != (N_STATE, N_STATE):
            raise ArgumentError("modification matrices must be 15x15")
        if c.shape != (N_STATE,):
            raise ArgumentError("correction must be a 15-vector")
        object.__setattr__(self, "d_f", d_f)
        object.__setattr__(self, "d_b", d_b)
        object.__setattr__(self, "c", c)

    def validate(self, m_bound: np.ndarray | None = None) -> None:
        """Check full rank of both matrices and optionally the correction bound."""
        for name, mat in (("d_f", self.d_f), ("d_b", self.d_b)):
            if abs(np.linalg.det(mat)) <= 1e-30:
                raise ArgumentError(f"{name} is rank deficient")
        if m_bound is not None and (np.abs(self.c) > np.asarray(m_bound, dtype=float)).any():
            raise ArgumentError("correction exceeds its bound vector")


@dataclass(frozen=True)
class BoundSchedule:
    """Correction bound vectors with a warm-up contraction ramp.

    The active bound interpolates from ``m_wide`` to ``m_base`` as the ramp
    rho(e) = clamp(e/e_w, 0, 1)^p goes from 0 to 1 over training epochs.
    """

    m_wide: np.ndarray
    m_base: np.ndarray
    e_w: int = 1000
    p: float = 2.0

    def __post_init__(self):
        m_wide = np.asarray(self.m_wide, dtype=float)
        m_base = np.asarray(self.m_base, dtype=float)
        if m_wide.shape != (N_STATE,) or m_base.shape != (N_STATE,):
            raise ArgumentError("bound vectors must be 15-vectors")
        object.__setattr__(self, "m_wide", m_wide)
        object.__setattr__(self, "m_base", m_base)
        if not ((m_base > 0).all() and (m_base <= m_wide).all()):
            raise ArgumentError("require 0 < m_base <= m_wide componentwise")
        if self.e_w < 1:
            raise ArgumentError("warm-up length must be >= 1 epoch")
        if self.p <= 0:
            raise ArgumentError("ramp exponent must be positive")

    def rho(self, epoch: float) -> float:
        return float(np.clip(epoch / self.e_w, 0.0, 1.0) ** self.p)

    def bounds(self, epoch: float) -> np.ndarray:
        r = self.rho(epoch)
        return (1.0 - r) * self.m_wide + r * self.m_base


def default_bound_schedule() -> BoundSchedule:
    """Ground-vehicle bound defaults: wide early-training limits contracting
    to tight final limits per state group."""
    m_wide = np.concatenate([
        [3e-7, 3e-7, 50.0],
        np.full(3, 2.0),
        np.full(3, np.pi),
        np.full(3, 0.5),
        np.full(3, 0.05),
    ])
    m_base = np.concatenate([
        [2e-7, 2e-7, 1.0],
        np.full(3, 0.50),
        np.full(3, np.pi / 180.0),
        np.full(3, 0.2),
        np.full(3, 0.002),
    ])
    return BoundSchedule(m_wide=m_wide, m_base=m_base, e_w=1000, p=2.0)


def pack_error_state(dp, dv, deps, dba, dbg) -> np.ndarray:
    """Concatenate the five 3-vector error groups into a 15-vector."""
    out = np.empty(N_STATE)
    out[POS] = dp
    out[VEL] = dv
    out[ATT] = deps
    out[BA] = dba
    out[BG] = dbg
    return out


def unpack_error_state(dx) -> tuple[np.ndarray, ...]:
    """Split a 15-vector into (dp, dv, deps, dba, dbg)."""
    dx = validate_error_state(dx)
    return dx[POS], dx[VEL], dx[ATT], dx[BA], dx[BG]


def validate_error_state(dx) -> np.ndarray:
    arr = np.asarray(dx, dtype=float)
    if arr.shape != (N_STATE,):
        raise ArgumentError(f"error state must be a {N_STATE}-vector, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ArgumentError("error state must be finite")
    return arr


def validate_cov(cov, rtol: float = 1e-10) -> np.ndarray:
    """Check the covariance contract: symmetric and positive definite."""
    arr = np.asarray(cov, dtype=float)
    if arr.shape != (N_STATE, N_STATE):
        raise ArgumentError(f"covariance must be {N_STATE}x{N_STATE}")
    if not np.isfinite(arr).all():
        raise ArgumentError("covariance must be finite")
    if not is_symmetric(arr, rtol):
        raise ArgumentError("covariance not symmetric within tolerance")
    if min_eig_balanced(arr) <= 0:
        raise ArgumentError("covariance not positive definite")
    return arr
