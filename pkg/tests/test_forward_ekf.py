import numpy as np
import pytest

import navsmooth as ns
from conftest import filter_noise, horizontal_errors
from navsmooth.errors import ArgumentError
from navsmooth.forward_ekf import (
    ForwardConfig,
    H_POS,
    apply_and_reset,
    kalman_gain,
    predict,
    run_forward,
    update,
)
from navsmooth.geodesy import ned_units_per_state
from navsmooth.linalg import _to_balanced, euler_from_rot
from navsmooth.strapdown import SystemMatrices, level_state, propagate_nominal
from navsmooth.types import GnssFix

POS = (np.deg2rad(32.0), np.deg2rad(34.8), 0.0)


def identity_sysmat(qd_scale=0.0):
    return SystemMatrices(f=np.zeros((15, 15)), g=np.zeros((15, 12)),
                          phi=np.eye(15), qd=qd_scale * np.eye(15))


def test_predict_keeps_zero_state_zero():
    dx, _ = predict(np.zeros(15), np.eye(15), identity_sysmat())
    assert np.array_equal(dx, np.zeros(15))


def test_predict_adds_process_noise_through_identity():
    _, p_minus = predict(np.zeros(15), np.eye(15), identity_sysmat(qd_scale=0.1))
    assert np.allclose(p_minus, 1.1 * np.eye(15))


def test_predict_grows_trace_with_simulator_dynamics(unbiased_run):
    trace = unbiased_run["trace"]
    k = 500
    sys = SystemMatrices(f=np.zeros((15, 15)), g=np.zeros((15, 12)),
                         phi=trace.phi[k], qd=trace.qd[k])
    _, p_minus = predict(np.zeros(15), trace.p_plus[k - 1], sys)
    assert np.trace(_to_balanced(p_minus)) > np.trace(_to_balanced(trace.p_plus[k - 1]))


def test_gain_halves_unit_covariance():
    gain = kalman_gain(np.eye(15), np.ones(3))
    assert np.allclose(gain[0:3, 0:3], 0.5 * np.eye(3), atol=1e-12)
    assert np.allclose(gain[3:, :], 0.0, atol=1e-12)


def test_update_zero_gain_limit():
    from navsmooth.forward_ekf import default_p0_diag

    state = level_state(POS)
    p_minus = np.diag(default_p0_diag())
    fix = GnssFix(t=0.0, pos_geo=POS, r_diag=np.full(3, 1e12))
    dx_plus, p_plus, _ = update(np.zeros(15), p_minus, fix, state)
    assert np.abs(dx_plus).max() < 1e-6
    assert np.abs(p_plus - p_minus).max() <= 1e-6 * np.abs(p_minus).max()


def test_update_pulls_estimate_toward_biased_fix(unbiased_run):
    # single-update check: a fix offset 3 m north moves the corrected state
    # north by nearly 3 m when the prior dwarfs the measurement noise
    state = level_state(POS)
    units = ned_units_per_state(POS[0], POS[2])
    fix_pos = (POS[0] + 3.0 / units[0], POS[1], POS[2])
    fix = GnssFix(t=0.0, pos_geo=fix_pos, r_diag=np.full(3, 1e-4))
    p_minus = np.diag(np.concatenate([[1e-10, 1e-10, 100.0], np.full(12, 1.0)]))
    dx_plus, _, dz = update(np.zeros(15), p_minus, fix, state)
    # residual is predicted minus measured: south-pointing for a north-biased fix
    assert dz[0] == pytest.approx(-3.0 / units[0])
    # error-state magnitude ~3 m equivalent, within 10 %
    assert abs(dx_plus[0]) * units[0] == pytest.approx(3.0, rel=0.10)
    corrected = apply_and_reset(state, dx_plus)
    moved_north = (corrected.pos_geo[0] - POS[0]) * units[0]
    assert moved_north == pytest.approx(3.0, rel=0.10)


def test_joseph_form_cross_check(unbiased_run):
    trace = unbiased_run["trace"]
    ks = np.nonzero(trace.update_flag)[0][5:8]
    for k in ks:
        p_minus = trace.p_minus[k]
        r_state = trace.r_state[k]
        gain = kalman_gain(p_minus, r_state)
        simple = (np.eye(15) - gain @ H_POS) @ p_minus
        joseph = ((np.eye(15) - gain @ H_POS) @ p_minus @ (np.eye(15) - gain @ H_POS).T
                  + gain @ np.diag(r_state) @ gain.T)
        a, b = _to_balanced(simple), _to_balanced(joseph)
        assert np.abs(a - b).max() <= 1e-9 * np.abs(b).max()


def test_trace_never_grows_at_updates(unbiased_run):
    trace = unbiased_run["trace"]
    ks = np.nonzero(trace.update_flag)[0]
    for k in ks:
        assert (np.trace(_to_balanced(trace.p_plus[k]))
                <= np.trace(_to_balanced(trace.p_minus[k])) + 1e-12)


def test_apply_and_reset_identity():
    state = level_state(POS, yaw=0.5, vel_ned=[1.0, 2.0, 0.0])
    out = apply_and_reset(state, np.zeros(15))
    assert out.pos_geo == state.pos_geo
    assert np.array_equal(out.vel_ned, state.vel_ned)


def test_zero_residual_construction_keeps_error_below_1e9():
    # fixes taken from the open-loop mechanization itself: the filter should
    # inject nothing beyond rounding
    spec = ns.TrajectorySpec(pattern="lawnmower", duration=20.0, speed=2.0,
                             leg_length=200.0, turn_radius=5.0)
    truth = ns.generate_truth(spec, 0.01)
    sensors = ns.SensorNoiseSpec(gyro_std=0.0, accel_std=0.0, gnss_std=0.0, seed=0)
    imu = ns.synthesize_imu(truth, sensors)

    state = level_state(tuple(truth.pos_geo[0]), yaw=0.0, vel_ned=truth.vel_ned[0])
    mech_pos = [state.pos_geo]
    for k in range(1, len(imu)):
        state = propagate_nominal(state, imu[k], 0.01)
        mech_pos.append(state.pos_geo)

    fixes = [ns.GnssFix(t=imu[k].t, pos_geo=mech_pos[k], r_diag=np.full(3, 1e-12))
             for k in range(0, len(imu), 10)]
    cfg = ForwardConfig(noise=filter_noise(sensors), init_rpy=(0.0, 0.0, 0.0),
                        init_vel_ned=truth.vel_ned[0])
    trace = run_forward(imu, fixes, cfg)
    assert np.abs(trace.dx).max() < 1e-9


def test_noiseless_run_tracks_truth():
    spec = ns.TrajectorySpec(pattern="lawnmower", duration=60.0, speed=2.0)
    truth = ns.generate_truth(spec, 0.01)
    sensors = ns.SensorNoiseSpec(gyro_std=0.0, accel_std=0.0, gnss_std=0.0, seed=0)
    imu = ns.synthesize_imu(truth, sensors)
    gnss = ns.synthesize_gnss(truth, sensors)
    cfg = ForwardConfig(noise=filter_noise(sensors),
                        init_rpy=euler_from_rot(truth.att[0]),
                        init_vel_ned=truth.vel_ned[0])
    trace = run_forward(imu, gnss, cfg)
    herr = horizontal_errors(truth, trace.pos_geo)
    assert np.sqrt(np.mean(herr**2)) < 1e-3


def test_unbiased_run_horizontal_rmse(unbiased_run):
    herr = horizontal_errors(unbiased_run["truth"], unbiased_run["trace"].pos_geo)
    assert np.sqrt(np.mean(herr**2)) < 0.5


def test_biased_run_inherits_offset(biased_run):
    herr = horizontal_errors(biased_run["truth"], biased_run["trace"].pos_geo)
    assert 2.7 <= herr.mean() <= 3.3


def test_empty_imu_stream_rejected():
    with pytest.raises(ArgumentError):
        run_forward([], [], ForwardConfig(noise=filter_noise(ns.SensorNoiseSpec())))


def test_trace_time_alignment(unbiased_run):
    trace = unbiased_run["trace"]
    flags = np.nonzero(trace.update_flag)[0]
    # 10 Hz updates against 100 Hz epochs, starting at the second fix
    assert (np.diff(flags) == 10).all()
    assert len(trace) == len(unbiased_run["imu"])


def test_trace_covariances_stay_valid(unbiased_run):
    from navsmooth.types import validate_cov

    trace = unbiased_run["trace"]
    for k in range(0, len(trace), 700):
        validate_cov(trace.p_minus[k])
        validate_cov(trace.p_plus[k])
