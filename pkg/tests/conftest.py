import numpy as np
import pytest

import navsmooth as ns
from navsmooth.backward_info import run_backward
from navsmooth.forward_ekf import ForwardConfig, run_forward
from navsmooth.linalg import euler_from_rot
from navsmooth.smoothers import rtss_smooth, tfs_smooth


def filter_noise(sensors: ns.SensorNoiseSpec) -> ns.ImuNoiseSpec:
    return ns.ImuNoiseSpec(
        sigma_a=max(sensors.accel_std, 1e-8),
        sigma_g=max(sensors.gyro_std, 1e-8),
        sigma_ab=1e-4,
        sigma_gb=1e-6,
    )


def simulate_bundle(duration=60.0, gnss_mu=0.0, seed=11, gnss_std=0.5,
                    pattern="lawnmower", speed=2.0):
    """Truth + sensors + forward/backward/smoother runs for tests."""
    spec = ns.TrajectorySpec(pattern=pattern, duration=duration, speed=speed)
    truth = ns.generate_truth(spec, 0.01)
    sensors = ns.SensorNoiseSpec(gnss_mu=gnss_mu, gnss_std=gnss_std, seed=seed)
    imu = ns.synthesize_imu(truth, sensors)
    gnss = ns.synthesize_gnss(truth, sensors)
    cfg = ForwardConfig(noise=filter_noise(sensors),
                        init_rpy=euler_from_rot(truth.att[0]),
                        init_vel_ned=truth.vel_ned[0])
    trace = run_forward(imu, gnss, cfg)
    backward = run_backward(trace.t, trace.phi, trace.qd, trace.update_flag,
                            trace.dz, trace.r_state, trace.dx, h=trace.h)
    return {
        "spec": spec, "truth": truth, "sensors": sensors, "imu": imu, "gnss": gnss,
        "config": cfg, "trace": trace, "backward": backward,
    }


@pytest.fixture(scope="session")
def unbiased_run():
    """60 s lawnmower, zero-mean GNSS noise."""
    return simulate_bundle(duration=60.0, gnss_mu=0.0, seed=11)


@pytest.fixture(scope="session")
def biased_run():
    """60 s lawnmower with a 3 m north GNSS offset."""
    return simulate_bundle(duration=60.0, gnss_mu=3.0, seed=12)


@pytest.fixture(scope="session")
def unbiased_smoothed(unbiased_run):
    tfs = tfs_smooth(unbiased_run["trace"], unbiased_run["backward"])
    rts = rtss_smooth(unbiased_run["trace"])
    return {"tfs": tfs, "rtss": rts}


@pytest.fixture(scope="session")
def biased_smoothed(biased_run):
    tfs = tfs_smooth(biased_run["trace"], biased_run["backward"])
    rts = rtss_smooth(biased_run["trace"])
    return {"tfs": tfs, "rtss": rts}


def horizontal_errors(truth, pos_geo, vel=None, att=None):
    from navsmooth.metrics import nav_errors

    n = len(pos_geo)
    errs = nav_errors(pos_geo, truth.vel_ned[:n], truth.att[:n],
                      truth.pos_geo[:n], truth.vel_ned[:n], truth.att[:n])
    return np.linalg.norm(errs["pos_ned"][:, :2], axis=1)


def random_spd(rng, dim=15, cond=10.0):
    """Well-conditioned random SPD matrix (exactly symmetric)."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eig = np.exp(rng.uniform(0.0, np.log(cond), dim))
    m = (q * eig) @ q.T
    return 0.5 * (m + m.T)
