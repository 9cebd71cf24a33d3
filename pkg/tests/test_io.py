import numpy as np
import pytest

import navsmooth.io as nio
from navsmooth.errors import FormatError
from navsmooth.simkit import SensorNoiseSpec, TrajectorySpec, generate_truth, synthesize_gnss, synthesize_imu
from navsmooth.types import CorrectionRecord


@pytest.fixture(scope="module")
def small_sim():
    spec = TrajectorySpec(pattern="lawnmower", duration=5.0, speed=2.0)
    truth = generate_truth(spec, 0.01)
    sensors = SensorNoiseSpec(seed=42)
    return truth, synthesize_imu(truth, sensors), synthesize_gnss(truth, sensors)


def test_imu_round_trip_bit_identical(tmp_path, small_sim):
    _, imu, _ = small_sim
    path = tmp_path / "imu.csv"
    nio.write_imu_csv(path, imu)
    back = nio.read_imu_csv(path)
    assert len(back) == len(imu)
    for a, b in zip(imu, back):
        assert a.t == b.t
        assert np.array_equal(a.f_b, b.f_b)
        assert np.array_equal(a.w_b, b.w_b)


def test_gnss_round_trip_bit_identical(tmp_path, small_sim):
    _, _, gnss = small_sim
    path = tmp_path / "gnss.csv"
    nio.write_gnss_csv(path, gnss)
    back = nio.read_gnss_csv(path)
    for a, b in zip(gnss, back):
        assert a.pos_geo == b.pos_geo
        assert np.array_equal(a.r_diag, b.r_diag)


def test_truth_round_trip(tmp_path, small_sim):
    truth, _, _ = small_sim
    path = tmp_path / "truth.csv"
    nio.write_truth_csv(path, truth)
    back = nio.read_truth_csv(path)
    assert np.array_equal(back.t, truth.t)
    assert np.array_equal(back.pos_geo, truth.pos_geo)
    assert np.array_equal(back.vel_ned, truth.vel_ned)
    # attitude passes through a quaternion; exact to rounding
    assert np.abs(back.att - truth.att).max() < 1e-12


def test_single_row_file_parses(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text(nio.IMU_HEADER + "\n0.0,0.1,0.2,-9.8,0.001,0.002,0.003\n")
    samples = nio.read_imu_csv(path)
    assert len(samples) == 1
    assert samples[0].f_b[2] == -9.8


def test_shuffled_time_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    rows = [
        "0.0,0,0,-9.8,0,0,0",
        "0.02,0,0,-9.8,0,0,0",
        "0.01,0,0,-9.8,0,0,0",
    ]
    path.write_text(nio.IMU_HEADER + "\n" + "\n".join(rows) + "\n")
    with pytest.raises(FormatError) as err:
        nio.read_imu_csv(path)
    assert err.value.line == 4


def test_wrong_header_rejected(tmp_path):
    path = tmp_path / "hdr.csv"
    path.write_text("time,ax,ay,az,gx,gy,gz\n0,0,0,0,0,0,0\n")
    with pytest.raises(FormatError):
        nio.read_imu_csv(path)


def test_missing_column_reports_line(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text(nio.IMU_HEADER + "\n0.0,0,0,-9.8,0,0,0\n0.01,0,0,-9.8,0,0\n")
    with pytest.raises(FormatError) as err:
        nio.read_imu_csv(path)
    assert err.value.line == 3


def test_correction_record_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    records = [
        CorrectionRecord(t=0.01 * k,
                         d_f=np.eye(15) + 1e-8 * rng.standard_normal((15, 15)),
                         d_b=np.eye(15) + 1e-8 * rng.standard_normal((15, 15)),
                         c=1e-3 * rng.standard_normal(15))
        for k in range(7)
    ]
    path = tmp_path / "records.csv"
    nio.write_correction_records(path, records)
    back = nio.read_correction_records(path)
    for a, b in zip(records, back):
        assert a.t == b.t
        assert np.array_equal(a.d_f, b.d_f)
        assert np.array_equal(a.d_b, b.d_b)
        assert np.array_equal(a.c, b.c)


def test_identity_record_round_trips_exactly(tmp_path):
    rec = CorrectionRecord(t=0.0, d_f=np.eye(15), d_b=np.eye(15), c=np.zeros(15))
    path = tmp_path / "identity.csv"
    nio.write_correction_records(path, [rec])
    back = nio.read_correction_records(path)[0]
    assert np.array_equal(back.d_f, np.eye(15))
    assert np.array_equal(back.d_b, np.eye(15))
    assert np.array_equal(back.c, np.zeros(15))


def test_record_row_length_validated(tmp_path):
    # 464 values per row instead of 466
    path = tmp_path / "short_records.csv"
    header = nio._RECORD_HEADER
    path.write_text(header + "\n" + ",".join(["0"] * 464) + "\n")
    with pytest.raises(FormatError):
        nio.read_correction_records(path)


def test_estimate_round_trip(tmp_path, small_sim):
    truth, _, _ = small_sim
    n = len(truth.t)
    p_diag = np.abs(np.random.default_rng(1).standard_normal((n, 15))) + 0.1
    path = tmp_path / "est.csv"
    nio.write_estimate_csv(path, truth.t, truth.pos_geo, truth.vel_ned, truth.att, p_diag)
    back = nio.read_estimate_csv(path)
    assert np.array_equal(back["pos_geo"], truth.pos_geo)
    assert np.array_equal(back["p_diag"], p_diag)
