"""Forward error-state EKF with loosely coupled GNSS position updates.

The filter propagates a nominal state through the strapdown mechanization
and keeps a 15-state error covariance. Position fixes enter as direct
measurements of the position error; after every update the error estimate
is folded into the nominal and reset to zero, so the stored nominal is
always the current best estimate.

Measurement residuals are expressed in state units (rad, rad, m), which
keeps the measurement matrix a plain position selector. The per-epoch
record kept in :class:`FilterTrace` is everything the fixed-interval
smoothers need afterwards.

Note on the update equation: the gain is applied to the innovation
``dz - H dx_minus``. Because the error state is reset each epoch,
``dx_minus`` is identically zero in this pipeline; the term is kept for
generality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, NumericalError
from .geodesy import curvature_radii, WGS84_A
from .linalg import N_STATE, symmetrize_and_condition
from .strapdown import ImuNoiseSpec, apply_error_state, linearize, propagate_nominal
from .types import GnssFix, ImuSample, NominalState

__all__ = ["ForwardConfig", "FilterTrace", "predict", "update", "apply_and_reset", "run_forward"]

H_POS = np.hstack([np.eye(3), np.zeros((3, 12))])

# balanced units for the 3x3 innovation solve (lat, lon in rad -> ~m)
_W3 = np.array([WGS84_A, WGS84_A, 1.0])


def default_p0_diag() -> np.ndarray:
    """Initial covariance diagonal: 5 m position, 2 m/s velocity, 0.05 rad
    roll/pitch with 0.1 rad heading, loose bias priors."""
    pos = np.array([(5.0 / WGS84_A) ** 2, (5.0 / WGS84_A) ** 2, 5.0**2])
    vel = np.full(3, 2.0**2)
    att = np.array([0.05**2, 0.05**2, 0.1**2])
    ba = np.full(3, 0.1**2)
    bg = np.full(3, 0.01**2)
    return np.concatenate([pos, vel, att, ba, bg])


@dataclass(frozen=True)
class ForwardConfig:
    """Forward filter configuration."""

    noise: ImuNoiseSpec
    p0_diag: np.ndarray = field(default_factory=default_p0_diag)
    init_vel_ned: np.ndarray = field(default_factory=lambda: np.zeros(3))
    init_rpy: tuple[float, float, float] = (0.0, 0.0, 0.0)
    init_b_a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    init_b_g: np.ndarray = field(default_factory=lambda: np.zeros(3))
    phi_order: int = 2
    qd_half: bool = True

    def __post_init__(self):
        p0 = np.asarray(self.p0_diag, dtype=float)
        if p0.shape != (N_STATE,) or not (p0 > 0).all():
            raise ArgumentError("p0_diag must be a positive 15-vector")
        object.__setattr__(self, "p0_diag", p0)
        object.__setattr__(self, "init_vel_ned", np.asarray(self.init_vel_ned, dtype=float))
        object.__setattr__(self, "init_b_a", np.asarray(self.init_b_a, dtype=float))
        object.__setattr__(self, "init_b_g", np.asarray(self.init_b_g, dtype=float))


@dataclass
class FilterTrace:
    """Per-epoch forward-pass record (structure of arrays).

    ``phi[k]`` and ``qd[k]`` describe the transition from epoch k-1 to k
    (identity / zero at k = 0). ``dx[k]`` is the post-update error estimate
    before it was folded into the nominal; the stored nominal is
    post-correction. ``dz`` and ``r_state`` are the applied residual and
    measurement variances in state units at update epochs, zero elsewhere.
    """

    t: np.ndarray
    pos_geo: np.ndarray
    vel_ned: np.ndarray
    att: np.ndarray
    b_a: np.ndarray
    b_g: np.ndarray
    dx: np.ndarray
    p_minus: np.ndarray
    p_plus: np.ndarray
    phi: np.ndarray
    qd: np.ndarray
    update_flag: np.ndarray
    dz: np.ndarray
    r_state: np.ndarray
    h: np.ndarray = field(default_factory=lambda: H_POS.copy())

    def __len__(self) -> int:
        return len(self.t)

    def nominal(self, k: int) -> NominalState:
        return NominalState(pos_geo=tuple(self.pos_geo[k]), vel_ned=self.vel_ned[k],
                            att=self.att[k], b_a=self.b_a[k], b_g=self.b_g[k])


def predict(dx_plus, p_plus, sysmat) -> tuple[np.ndarray, np.ndarray]:
    """Propagate the error estimate and covariance one step."""
    dx_minus = sysmat.phi @ np.asarray(dx_plus, dtype=float)
    p_minus = symmetrize_and_condition(sysmat.phi @ p_plus @ sysmat.phi.T + sysmat.qd)
    return dx_minus, p_minus


def measurement_in_state_units(fix: GnssFix, nominal: NominalState) -> tuple[np.ndarray, np.ndarray]:
    """Residual (predicted minus measured position) and measurement variances,
    both in state units (rad, rad, m)."""
    lat, lon, alt = nominal.pos_geo
    dz = np.array([lat - fix.pos_geo[0], lon - fix.pos_geo[1], alt - fix.pos_geo[2]])
    r_n, r_e = curvature_radii(lat)
    scale = np.array([(r_n + alt) ** 2, ((r_e + alt) * np.cos(lat)) ** 2, 1.0])
    r_state = fix.r_diag / scale
    return dz, r_state


def kalman_gain(p_minus: np.ndarray, r_state: np.ndarray) -> np.ndarray:
    """Position-update gain, computed in balanced units for conditioning."""
    w15 = np.ones(N_STATE)
    w15[0:2] = WGS84_A
    pb = p_minus * np.outer(w15, w15)
    s = pb[0:3, 0:3] + np.diag(r_state * _W3**2)
    try:
        k_bal = np.linalg.solve(s.T, pb[:, 0:3].T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance not invertible") from exc
    if not np.isfinite(k_bal).all():
        raise NumericalError("gain computation produced non-finite values")
    return k_bal * np.outer(1.0 / w15, _W3)


def update(dx_minus, p_minus, fix: GnssFix, nominal: NominalState):
    """Apply one GNSS position update.

    Returns
    -------
    (dx_plus, p_plus, dz):
        Updated error estimate, updated covariance, and the residual in
        state units.
    """
    dx_minus = np.asarray(dx_minus, dtype=float)
    dz, r_state = measurement_in_state_units(fix, nominal)
    gain = kalman_gain(p_minus, r_state)
    dx_plus = dx_minus + gain @ (dz - H_POS @ dx_minus)
    p_plus = symmetrize_and_condition((np.eye(N_STATE) - gain @ H_POS) @ p_minus)
    return dx_plus, p_plus, dz


def apply_and_reset(nominal: NominalState, dx_plus) -> NominalState:
    """Fold the error estimate into the nominal; the caller's error state is
    zero afterwards by convention."""
    return apply_error_state(nominal, np.asarray(dx_plus, dtype=float))


def _align_updates(imu_t: np.ndarray, fixes: list[GnssFix], dt_nominal: float) -> dict[int, GnssFix]:
    """Map each fix to its nearest IMU epoch (within half an IMU period)."""
    aligned: dict[int, GnssFix] = {}
    for fix in fixes:
        k = int(np.argmin(np.abs(imu_t - fix.t)))
        if abs(imu_t[k] - fix.t) <= 0.5 * dt_nominal + 1e-12:
            aligned[k] = fix
    return aligned


def run_forward(imu: list[ImuSample], gnss: list[GnssFix], config: ForwardConfig) -> FilterTrace:
    """Run the forward pass over the full streams and record the trace."""
    if len(imu) == 0:
        raise ArgumentError("empty IMU stream")
    t = np.array([s.t for s in imu])
    if (np.diff(t) <= 0).any():
        raise ArgumentError("IMU timestamps must be strictly increasing")
    if len(gnss) >= 2:
        gt = np.array([f.t for f in gnss])
        if (np.diff(gt) <= 0).any():
            raise ArgumentError("GNSS timestamps must be strictly increasing")
        if np.median(np.diff(gt)) < np.median(np.diff(t)) - 1e-12:
            raise ArgumentError("GNSS rate exceeds IMU rate")
    if not gnss:
        raise ArgumentError("need at least one GNSS fix for initialization")

    n = len(imu)
    dt_nominal = float(np.median(np.diff(t))) if n > 1 else 0.01
    aligned = _align_updates(t, gnss, dt_nominal)

    from .linalg import rot_from_euler

    state = NominalState(
        pos_geo=gnss[0].pos_geo,
        vel_ned=config.init_vel_ned,
        att=rot_from_euler(*config.init_rpy),
        b_a=config.init_b_a,
        b_g=config.init_b_g,
    )

    trace = FilterTrace(
        t=t,
        pos_geo=np.zeros((n, 3)),
        vel_ned=np.zeros((n, 3)),
        att=np.zeros((n, 3, 3)),
        b_a=np.zeros((n, 3)),
        b_g=np.zeros((n, 3)),
        dx=np.zeros((n, N_STATE)),
        p_minus=np.zeros((n, N_STATE, N_STATE)),
        p_plus=np.zeros((n, N_STATE, N_STATE)),
        phi=np.zeros((n, N_STATE, N_STATE)),
        qd=np.zeros((n, N_STATE, N_STATE)),
        update_flag=np.zeros(n, dtype=bool),
        dz=np.zeros((n, 3)),
        r_state=np.zeros((n, 3)),
    )

    p = np.diag(config.p0_diag)
    trace.phi[0] = np.eye(N_STATE)
    trace.p_minus[0] = p
    trace.p_plus[0] = p
    _store_nominal(trace, 0, state)

    for k in range(1, n):
        dt = float(t[k] - t[k - 1])
        sysmat = linearize(state, imu[k], config.noise, dt,
                           phi_order=config.phi_order, qd_half=config.qd_half)
        state = propagate_nominal(state, imu[k], dt)
        _, p_minus = predict(np.zeros(N_STATE), p, sysmat)

        trace.phi[k] = sysmat.phi
        trace.qd[k] = sysmat.qd
        trace.p_minus[k] = p_minus

        fix = aligned.get(k)
        if fix is not None and fix.t > t[0] + 0.5 * dt_nominal:
            dz, r_state = measurement_in_state_units(fix, state)
            dx_plus, p, _ = update(np.zeros(N_STATE), p_minus, fix, state)
            state = apply_and_reset(state, dx_plus)
            trace.update_flag[k] = True
            trace.dz[k] = dz
            trace.r_state[k] = r_state
            trace.dx[k] = dx_plus
        else:
            p = p_minus

        trace.p_plus[k] = p
        _store_nominal(trace, k, state)

    return trace


def _store_nominal(trace: FilterTrace, k: int, state: NominalState) -> None:
    trace.pos_geo[k] = state.pos_geo
    trace.vel_ned[k] = state.vel_ned
    trace.att[k] = state.att
    trace.b_a[k] = state.b_a
    trace.b_g[k] = state.b_g
