import numpy as np
import pytest

from conftest import random_spd
from navsmooth.errors import NumericalError
from navsmooth.linalg import (
    N_STATE,
    euler_from_rot,
    exp_so3,
    fuse_information,
    inv_spd,
    log_so3,
    min_eig_balanced,
    quat_from_rot,
    rot_from_euler,
    rot_from_quat,
    symmetrize_and_condition,
)


def test_condition_identity_passthrough():
    p = np.eye(N_STATE)
    assert np.array_equal(symmetrize_and_condition(p), p)


def test_condition_averages_asymmetry():
    p = np.eye(N_STATE)
    p[0, 1] = 1e-11
    out = symmetrize_and_condition(p)
    assert out[0, 1] == pytest.approx(5e-12)
    assert out[1, 0] == pytest.approx(5e-12)


def test_condition_restores_positive_definiteness():
    p = np.eye(N_STATE)
    p[-1, -1] = -1e-13
    out = symmetrize_and_condition(p)
    # independent check: eigen-solve the conditioned output
    assert np.linalg.eigvalsh(out).min() > 0


def test_condition_rejects_non_finite():
    p = np.eye(N_STATE)
    p[3, 4] = np.nan
    with pytest.raises(NumericalError):
        symmetrize_and_condition(p)


def test_congruence_preserves_positive_definiteness():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = random_spd(rng)
        m = rng.standard_normal((N_STATE, N_STATE)) + np.eye(N_STATE)
        q = m @ p @ m.T
        assert np.linalg.eigvalsh(0.5 * (q + q.T)).min() > 0


def test_rotation_exp_log_round_trip():
    rng = np.random.default_rng(8)
    for _ in range(50):
        phi = rng.standard_normal(3)
        phi *= rng.uniform(0, 3.0) / np.linalg.norm(phi)
        assert np.abs(log_so3(exp_so3(phi)) - phi).max() < 1e-9


def test_quaternion_round_trip():
    rng = np.random.default_rng(9)
    for _ in range(50):
        rot = exp_so3(rng.standard_normal(3))
        assert np.abs(rot_from_quat(quat_from_rot(rot)) - rot).max() < 1e-12


def test_euler_round_trip():
    rng = np.random.default_rng(10)
    for _ in range(50):
        rpy = rng.uniform([-np.pi, -np.pi / 2 + 0.01, -np.pi],
                          [np.pi, np.pi / 2 - 0.01, np.pi])
        back = euler_from_rot(rot_from_euler(*rpy))
        assert np.abs(np.asarray(back) - rpy).max() < 1e-10


def test_inv_spd_matches_plain_inverse_on_balanced_input():
    rng = np.random.default_rng(11)
    p = random_spd(rng, cond=50.0)
    assert np.abs(inv_spd(p) @ p - np.eye(N_STATE)).max() < 1e-10


def test_fuse_information_parallel_covariance():
    # two equal information sources halve the covariance
    p_f = 2.0 * np.eye(N_STATE)
    info_b = 0.5 * np.eye(N_STATE)
    p_s, dx = fuse_information(p_f, info_b, np.zeros(N_STATE))
    assert np.allclose(p_s, np.eye(N_STATE))
    assert np.allclose(dx, 0.0)


def test_fuse_information_matches_naive_formula():
    rng = np.random.default_rng(12)
    for _ in range(20):
        p_f = random_spd(rng, cond=20.0)
        p_b = random_spd(rng, cond=20.0)
        info_b = np.linalg.inv(p_b)
        s_b = info_b @ rng.standard_normal(N_STATE)
        p_s, dx = fuse_information(p_f, 0.5 * (info_b + info_b.T), s_b)
        expect_p = np.linalg.inv(np.linalg.inv(p_f) + info_b)
        assert np.abs(p_s - expect_p).max() < 1e-9 * np.abs(expect_p).max()
        assert np.abs(dx - expect_p @ s_b).max() < 1e-8


def test_min_eig_balanced_sign():
    assert min_eig_balanced(np.eye(N_STATE)) > 0
    p = np.eye(N_STATE)
    p[0, 0] = -1e-20    # horizontal slot, tiny raw magnitude
    assert min_eig_balanced(p) < 0
