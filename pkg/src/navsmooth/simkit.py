"""Ground-truth trajectory generation and sensor synthesis.

Trajectories are built from constant-speed straight and constant-rate arc
segments with closed-form kinematics, so stored position, velocity and
attitude are mutually consistent to machine precision inside each segment.
Heading jumps are never instantaneous: corners are arcs with turn rate
speed/turn_radius.

Sensor synthesis is seed-deterministic using the counter-based Philox
generator, so identical specs reproduce identical streams across runs and
platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .geodesy import GRAVITY_NED, ned_to_geo
from .linalg import exp_so3, log_so3, rot_from_euler
from .types import GnssFix, ImuSample, NominalState

__all__ = [
    "TrajectorySpec",
    "SensorNoiseSpec",
    "TruthTrajectory",
    "generate_truth",
    "synthesize_imu",
    "synthesize_gnss",
]

RNG_ALGORITHM = "philox"   # pinned counter-based generator

PATTERNS = ("lawnmower", "square", "circle", "sine", "zigzag", "infinity")

# variance floor keeping reported GNSS covariances positive when std = 0
R_DIAG_FLOOR = 1e-12


@dataclass(frozen=True)
class TrajectorySpec:
    """Geometry of a simulated trajectory.

    Only the parameters relevant to the chosen pattern are used: lawnmower
    reads ``leg_length``/``turn_radius``, square reads ``side``/``turn_radius``,
    circle and infinity read ``radius``, sine reads ``heading_amplitude`` and
    ``heading_period``, zigzag reads ``zigzag_leg``/``zigzag_angle``/
    ``turn_radius``.
    """

    pattern: str = "lawnmower"
    duration: float = 400.0
    speed: float = 2.0
    leg_length: float = 80.0
    turn_radius: float = 5.0
    side: float = 60.0
    radius: float = 30.0
    heading_amplitude: float = np.pi / 4
    heading_period: float = 30.0
    zigzag_leg: float = 40.0
    zigzag_angle: float = np.pi / 4
    origin: tuple[float, float, float] = (0.5585053606381855, 0.6074246803182614, 0.0)

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ArgumentError(f"unsupported pattern {self.pattern!r}; choose from {PATTERNS}")
        if self.duration <= 0 or self.speed <= 0:
            raise ArgumentError("duration and speed must be positive")
        if min(self.leg_length, self.turn_radius, self.side, self.radius,
               self.heading_period, self.zigzag_leg) <= 0:
            raise ArgumentError("geometry parameters must be positive")


@dataclass(frozen=True)
class SensorNoiseSpec:
    """Sensor error configuration for synthesis.

    ``gnss_mu`` is a systematic NED position offset in meters; a scalar is
    taken as a north offset and a 2-vector as (north, east). The offset is
    deliberately not reported in the fix covariance: receivers do not know
    their own bias.
    """

    gyro_std: float = 0.0316          # per-sample [rad/s]
    accel_std: float = 0.3158         # per-sample [m/s^2] (~32.2 mg)
    gnss_mu: float | tuple = 0.0      # NED bias [m]
    gnss_std: float = 0.5             # per-axis [m]
    imu_rate: float = 100.0           # [Hz]
    gnss_rate: float = 10.0           # [Hz]
    seed: int = 0

    def __post_init__(self):
        if self.imu_rate <= 0 or self.gnss_rate <= 0:
            raise ArgumentError("rates must be positive")
        if self.gyro_std < 0 or self.accel_std < 0 or self.gnss_std < 0:
            raise ArgumentError("noise standard deviations must be nonnegative")

    def mu_ned(self) -> np.ndarray:
        mu = np.atleast_1d(np.asarray(self.gnss_mu, dtype=float))
        if mu.size == 1:
            return np.array([mu[0], 0.0, 0.0])
        if mu.size == 2:
            return np.array([mu[0], mu[1], 0.0])
        if mu.size == 3:
            return mu.astype(float)
        raise ArgumentError("gnss_mu must be scalar, 2-vector or 3-vector")


@dataclass(frozen=True)
class _Segment:
    kind: str          # "straight" | "arc" | "sine"
    duration: float
    # pose at segment start
    n0: float
    e0: float
    psi0: float
    yaw_rate: float = 0.0
    # sine parameters (heading modulation around psi0)
    amp: float = 0.0
    omega: float = 0.0


def _segment_pose(seg: _Segment, speed: float, tau: float) -> tuple[float, float, float]:
    """(north, east, heading) at time tau into a straight or arc segment."""
    if seg.kind == "straight":
        return (seg.n0 + speed * tau * np.cos(seg.psi0),
                seg.e0 + speed * tau * np.sin(seg.psi0),
                seg.psi0)
    psi = seg.psi0 + seg.yaw_rate * tau
    r = speed / seg.yaw_rate
    return (seg.n0 + r * (np.sin(psi) - np.sin(seg.psi0)),
            seg.e0 - r * (np.cos(psi) - np.cos(seg.psi0)),
            psi)


def _segment_rates(seg: _Segment, tau: float) -> float:
    """Heading rate at time tau into a segment."""
    if seg.kind == "straight":
        return 0.0
    if seg.kind == "arc":
        return seg.yaw_rate
    return seg.amp * seg.omega * np.cos(seg.omega * tau)


def _build_segments(spec: TrajectorySpec) -> list[_Segment]:
    v = spec.speed
    segs: list[_Segment] = []
    n, e, psi = 0.0, 0.0, 0.0
    t_total = 0.0

    def add(kind: str, duration: float, yaw_rate: float = 0.0, amp: float = 0.0, omega: float = 0.0):
        nonlocal n, e, psi, t_total
        seg = _Segment(kind=kind, duration=duration, n0=n, e0=e, psi0=psi,
                       yaw_rate=yaw_rate, amp=amp, omega=omega)
        segs.append(seg)
        n, e, psi = _segment_pose(seg, v, duration)
        t_total += duration

    if spec.pattern == "circle":
        add("arc", spec.duration, yaw_rate=v / spec.radius)
        return segs

    if spec.pattern == "sine":
        # single weaving segment; positions integrated on the epoch grid
        segs.append(_Segment(kind="sine", duration=spec.duration, n0=0.0, e0=0.0,
                             psi0=0.0, amp=spec.heading_amplitude,
                             omega=2 * np.pi / spec.heading_period))
        return segs

    if spec.pattern == "infinity":
        lap = 2 * np.pi * spec.radius / v
        sign = 1.0
        while t_total < spec.duration - 1e-9:
            add("arc", min(lap, spec.duration - t_total), yaw_rate=sign * v / spec.radius)
            sign = -sign
        return segs

    if spec.pattern == "square":
        r = spec.turn_radius
        if spec.side <= 2 * r:
            raise ArgumentError("square side must exceed the turn diameter")
        straight = (spec.side - 2 * r) / v
        quarter = (np.pi / 2) * r / v
        while t_total < spec.duration - 1e-9:
            add("straight", min(straight, spec.duration - t_total))
            if t_total >= spec.duration - 1e-9:
                break
            add("arc", min(quarter, spec.duration - t_total), yaw_rate=v / r)
        return segs

    if spec.pattern == "zigzag":
        r = spec.turn_radius
        half = spec.zigzag_angle
        straight = spec.zigzag_leg / v
        turn = 2 * half * r / v
        psi = half              # first leg angled east of north
        n = e = 0.0
        segs.clear()
        t_total = 0.0
        sign = -1.0
        while t_total < spec.duration - 1e-9:
            add("straight", min(straight, spec.duration - t_total))
            if t_total >= spec.duration - 1e-9:
                break
            add("arc", min(turn, spec.duration - t_total), yaw_rate=sign * v / r)
            sign = -sign
        return segs

    # lawnmower: north-south legs spanning [r, L - r] joined by half-turn arcs
    # that top out at exactly L and bottom out at exactly 0, so the north
    # extent equals leg_length by construction.
    r = spec.turn_radius
    length = spec.leg_length
    if length <= 2 * r:
        raise ArgumentError("lawnmower leg_length must exceed the turn diameter")
    n = r
    straight = (length - 2 * r) / v
    half_turn = np.pi * r / v
    sign = 1.0                  # first turn clockwise (east of the north leg)
    while t_total < spec.duration - 1e-9:
        add("straight", min(straight, spec.duration - t_total))
        if t_total >= spec.duration - 1e-9:
            break
        add("arc", min(half_turn, spec.duration - t_total), yaw_rate=sign * v / r)
    return segs


@dataclass(frozen=True)
class TruthTrajectory:
    """Sampled ground truth with exact per-epoch kinematics."""

    t: np.ndarray
    pos_geo: np.ndarray        # (N, 3) lat, lon, alt
    vel_ned: np.ndarray        # (N, 3)
    att: np.ndarray            # (N, 3, 3) body->NED
    ned: np.ndarray            # (N, 3) local NED track relative to origin
    yaw_rate: np.ndarray       # (N,)
    origin: tuple[float, float, float]
    corner_mask: np.ndarray = field(repr=False, default=None)   # True near segment joints

    def __len__(self) -> int:
        return len(self.t)

    def state(self, k: int) -> NominalState:
        return NominalState(pos_geo=tuple(self.pos_geo[k]), vel_ned=self.vel_ned[k],
                            att=self.att[k])


def generate_truth(spec: TrajectorySpec, dt: float) -> TruthTrajectory:
    """Sample a trajectory at step ``dt``; ``dt`` must divide the duration."""
    if dt <= 0:
        raise ArgumentError("dt must be positive")
    steps = spec.duration / dt
    if abs(steps - round(steps)) > 1e-9:
        raise ArgumentError(f"dt={dt} does not divide duration={spec.duration}")
    n_epochs = int(round(steps)) + 1

    segs = _build_segments(spec)
    starts = np.concatenate([[0.0], np.cumsum([s.duration for s in segs])])
    t = np.arange(n_epochs) * dt

    ned = np.zeros((n_epochs, 3))
    vel = np.zeros((n_epochs, 3))
    att = np.zeros((n_epochs, 3, 3))
    yaw_rate = np.zeros(n_epochs)
    corner = np.zeros(n_epochs, dtype=bool)
    pos = np.zeros((n_epochs, 3))

    v = spec.speed
    if spec.pattern == "sine":
        seg = segs[0]
        sub = 10
        t_fine = np.linspace(0.0, spec.duration, sub * (n_epochs - 1) + 1)
        psi_fine = seg.amp * np.sin(seg.omega * t_fine)
        # cumulative trapezoid of v*(cos psi, sin psi) on the fine grid
        dn = 0.5 * (np.cos(psi_fine[1:]) + np.cos(psi_fine[:-1])) * np.diff(t_fine) * v
        de = 0.5 * (np.sin(psi_fine[1:]) + np.sin(psi_fine[:-1])) * np.diff(t_fine) * v
        ned[:, 0] = np.concatenate([[0.0], np.cumsum(dn)])[::sub]
        ned[:, 1] = np.concatenate([[0.0], np.cumsum(de)])[::sub]
        psi_k = psi_fine[::sub]
        for k in range(n_epochs):
            vel[k] = (v * np.cos(psi_k[k]), v * np.sin(psi_k[k]), 0.0)
            att[k] = rot_from_euler(0.0, 0.0, psi_k[k])
            yaw_rate[k] = seg.amp * seg.omega * np.cos(seg.omega * t[k])
            pos[k] = ned_to_geo(ned[k], spec.origin)
    else:
        for k, tk in enumerate(t):
            idx = int(np.searchsorted(starts, tk + 1e-12) - 1)
            idx = min(max(idx, 0), len(segs) - 1)
            tau = tk - starts[idx]
            nr, ea, psi = _segment_pose(segs[idx], v, tau)
            ned[k] = (nr, ea, 0.0)
            vel[k] = (v * np.cos(psi), v * np.sin(psi), 0.0)
            att[k] = rot_from_euler(0.0, 0.0, psi)
            yaw_rate[k] = _segment_rates(segs[idx], tau)
            pos[k] = ned_to_geo(ned[k], spec.origin)
            near = min(abs(tau), abs(segs[idx].duration - tau))
            corner[k] = near < 2 * dt and len(segs) > 1

    return TruthTrajectory(t=t, pos_geo=pos, vel_ned=vel, att=att, ned=ned,
                           yaw_rate=yaw_rate, origin=spec.origin, corner_mask=corner)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=stream << 32))


def synthesize_imu(truth: TruthTrajectory, noise: SensorNoiseSpec) -> list[ImuSample]:
    """Synthesize body-frame IMU samples from the truth sequence.

    Angular rate comes from finite differences of the stored attitude and
    specific force from finite differences of the stored velocity, rotated at
    the step-midpoint attitude. This makes the stream the near-exact inverse
    of the strapdown mechanization, so a noiseless replay reproduces the
    truth to integration accuracy.
    """
    n = len(truth)
    if n < 2:
        raise ArgumentError("need at least two truth epochs")
    dt = truth.t[1] - truth.t[0]

    gyro = _rng(noise.seed, 0)
    accel = _rng(noise.seed, 1)

    samples: list[ImuSample] = []
    for k in range(1, n):
        w_clean = log_so3(truth.att[k - 1].T @ truth.att[k]) / dt
        att_mid = truth.att[k - 1] @ exp_so3(w_clean * (0.5 * dt))
        a_ned = (truth.vel_ned[k] - truth.vel_ned[k - 1]) / dt
        f_clean = att_mid.T @ (a_ned - GRAVITY_NED)
        w = w_clean + noise.gyro_std * gyro.standard_normal(3)
        f = f_clean + noise.accel_std * accel.standard_normal(3)
        if k == 1:
            # placeholder opening sample: defines the stream start time only
            samples.append(ImuSample(t=float(truth.t[0]), f_b=f, w_b=w))
        samples.append(ImuSample(t=float(truth.t[k]), f_b=f, w_b=w))
    return samples


def synthesize_gnss(truth: TruthTrajectory, noise: SensorNoiseSpec) -> list[GnssFix]:
    """Synthesize GNSS fixes: truth plus a constant NED offset plus white noise.

    The reported covariance carries only the white-noise variance; the offset
    is invisible to the consumer, which is precisely what makes it inherit
    into any estimator that trusts the fixes.
    """
    stride = noise.imu_rate / noise.gnss_rate
    if abs(stride - round(stride)) > 1e-9 or stride < 1:
        raise ArgumentError("imu_rate must be an integer multiple of gnss_rate")
    stride = int(round(stride))

    rng = _rng(noise.seed, 2)
    mu = noise.mu_ned()
    r_diag = np.full(3, max(noise.gnss_std**2, R_DIAG_FLOOR))

    fixes: list[GnssFix] = []
    for k in range(0, len(truth), stride):
        offset = mu + noise.gnss_std * rng.standard_normal(3)
        pos = ned_to_geo(offset, tuple(truth.pos_geo[k]))
        fixes.append(GnssFix(t=float(truth.t[k]), pos_geo=pos, r_diag=r_diag.copy()))
    return fixes
