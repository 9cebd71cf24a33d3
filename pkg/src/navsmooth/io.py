"""Dataset, trace and correction-record file formats.

All files are comma-separated with a mandatory header row and values written
at 17 significant digits, which round-trips IEEE doubles exactly.

Formats
-------
IMU:        t,fx,fy,fz,wx,wy,wz
GNSS:       t,lat,lon,alt,rn,re,rd          (lat/lon rad; rn,re,rd m^2)
truth:      t,lat,lon,alt,vn,ve,vd,q0,q1,q2,q3
estimate:   truth columns + cov0..cov14     (covariance diagonal, state units)
records:    t + 225 D_f entries (column-major) + 225 D_b entries + 15 c
fusion trace (trainer input), per epoch:
            t, dxf (15), dxb (15), pf (225, column-major), pb (225),
            ib (225), sb (15), lat, lon, alt, vn, ve, vd, q0..q3, noinfo
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backward_info import BackwardResult
from .errors import FormatError
from .forward_ekf import FilterTrace
from .linalg import N_STATE, quat_from_rot, rot_from_quat
from .types import CorrectionRecord, GnssFix, ImuSample, NominalState

__all__ = [
    "IMU_HEADER",
    "GNSS_HEADER",
    "TRUTH_HEADER",
    "read_imu_csv",
    "write_imu_csv",
    "read_gnss_csv",
    "write_gnss_csv",
    "read_truth_csv",
    "write_truth_csv",
    "TruthSeries",
    "write_estimate_csv",
    "read_estimate_csv",
    "write_correction_records",
    "read_correction_records",
    "write_fusion_trace",
    "RECORD_ROW_LEN",
]

IMU_HEADER = "t,fx,fy,fz,wx,wy,wz"
GNSS_HEADER = "t,lat,lon,alt,rn,re,rd"
TRUTH_HEADER = "t,lat,lon,alt,vn,ve,vd,q0,q1,q2,q3"
ESTIMATE_HEADER = TRUTH_HEADER + "," + ",".join(f"cov{i}" for i in range(N_STATE))
RECORD_ROW_LEN = 1 + 225 + 225 + 15

_FMT = "%.17g"


def _write_table(path, header: str, rows: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(rows), fmt=_FMT, delimiter=",",
               header=header, comments="")


def _read_table(path, header: str, n_cols: int) -> np.ndarray:
    path = Path(path)
    with path.open("r") as fh:
        first = fh.readline().rstrip("\n")
    if first != header:
        raise FormatError(f"{path}: expected header {header!r}, got {first!r}", line=1)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError:
        _locate_bad_row(path, n_cols)
        raise FormatError(f"{path}: malformed numeric content")
    if data.size == 0:
        raise FormatError(f"{path}: no data rows", line=2)
    if data.shape[1] != n_cols:
        raise FormatError(
            f"{path}: expected {n_cols} columns, got {data.shape[1]}", line=2)
    return data


def _locate_bad_row(path: Path, n_cols: int) -> None:
    with path.open("r") as fh:
        next(fh)
        for i, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if line.strip() == "":
                continue
            if len(parts) != n_cols:
                raise FormatError(
                    f"{path}: expected {n_cols} values, got {len(parts)}", line=i)
            try:
                [float(p) for p in parts]
            except ValueError:
                raise FormatError(f"{path}: non-numeric value", line=i)


def _check_monotonic(path, t: np.ndarray) -> None:
    bad = np.nonzero(np.diff(t) <= 0)[0]
    if bad.size:
        raise FormatError(f"{path}: non-monotonic time", line=int(bad[0]) + 3)


def write_imu_csv(path, samples: list[ImuSample]) -> None:
    rows = np.array([[s.t, *s.f_b, *s.w_b] for s in samples])
    _write_table(path, IMU_HEADER, rows)


def read_imu_csv(path) -> list[ImuSample]:
    data = _read_table(path, IMU_HEADER, 7)
    _check_monotonic(path, data[:, 0])
    return [ImuSample(t=row[0], f_b=row[1:4], w_b=row[4:7]) for row in data]


def write_gnss_csv(path, fixes: list[GnssFix]) -> None:
    rows = np.array([[f.t, *f.pos_geo, *f.r_diag] for f in fixes])
    _write_table(path, GNSS_HEADER, rows)


def read_gnss_csv(path) -> list[GnssFix]:
    data = _read_table(path, GNSS_HEADER, 7)
    _check_monotonic(path, data[:, 0])
    return [GnssFix(t=row[0], pos_geo=tuple(row[1:4]), r_diag=row[4:7]) for row in data]


@dataclass
class TruthSeries:
    """Truth read back from file, aligned on its own time base."""

    t: np.ndarray
    pos_geo: np.ndarray
    vel_ned: np.ndarray
    att: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def state(self, k: int) -> NominalState:
        return NominalState(pos_geo=tuple(self.pos_geo[k]), vel_ned=self.vel_ned[k],
                            att=self.att[k])


def write_truth_csv(path, truth) -> None:
    """Write a truth sequence (anything with t/pos_geo/vel_ned/att arrays)."""
    n = len(truth.t)
    rows = np.zeros((n, 11))
    rows[:, 0] = truth.t
    rows[:, 1:4] = truth.pos_geo
    rows[:, 4:7] = truth.vel_ned
    for k in range(n):
        rows[k, 7:11] = quat_from_rot(truth.att[k])
    _write_table(path, TRUTH_HEADER, rows)


def read_truth_csv(path) -> TruthSeries:
    data = _read_table(path, TRUTH_HEADER, 11)
    _check_monotonic(path, data[:, 0])
    n = len(data)
    att = np.zeros((n, 3, 3))
    for k in range(n):
        att[k] = rot_from_quat(data[k, 7:11])
    return TruthSeries(t=data[:, 0], pos_geo=data[:, 1:4], vel_ned=data[:, 4:7], att=att)


def write_estimate_csv(path, t, pos_geo, vel_ned, att, p_diag) -> None:
    """Write per-epoch estimates with the covariance diagonal appended."""
    n = len(t)
    rows = np.zeros((n, 11 + N_STATE))
    rows[:, 0] = t
    rows[:, 1:4] = pos_geo
    rows[:, 4:7] = vel_ned
    for k in range(n):
        rows[k, 7:11] = quat_from_rot(att[k])
    rows[:, 11:] = p_diag
    _write_table(path, ESTIMATE_HEADER, rows)


def read_estimate_csv(path) -> dict:
    data = _read_table(path, ESTIMATE_HEADER, 11 + N_STATE)
    _check_monotonic(path, data[:, 0])
    n = len(data)
    att = np.zeros((n, 3, 3))
    for k in range(n):
        att[k] = rot_from_quat(data[k, 7:11])
    return {
        "t": data[:, 0],
        "pos_geo": data[:, 1:4],
        "vel_ned": data[:, 4:7],
        "att": att,
        "p_diag": data[:, 11:],
    }


_RECORD_HEADER = "t," + ",".join(f"df{i}" for i in range(225)) + "," + \
    ",".join(f"db{i}" for i in range(225)) + "," + ",".join(f"c{i}" for i in range(15))


def write_correction_records(path, records: list[CorrectionRecord]) -> None:
    rows = np.zeros((len(records), RECORD_ROW_LEN))
    for i, rec in enumerate(records):
        rows[i, 0] = rec.t
        rows[i, 1:226] = rec.d_f.ravel(order="F")
        rows[i, 226:451] = rec.d_b.ravel(order="F")
        rows[i, 451:466] = rec.c
    _write_table(path, _RECORD_HEADER, rows)


def read_correction_records(path) -> list[CorrectionRecord]:
    data = _read_table(path, _RECORD_HEADER, RECORD_ROW_LEN)
    records = []
    for row in data:
        records.append(CorrectionRecord(
            t=row[0],
            d_f=row[1:226].reshape((15, 15), order="F"),
            d_b=row[226:451].reshape((15, 15), order="F"),
            c=row[451:466],
        ))
    return records


_FUSION_HEADER = (
    "t,"
    + ",".join(f"dxf{i}" for i in range(15)) + ","
    + ",".join(f"dxb{i}" for i in range(15)) + ","
    + ",".join(f"pf{i}" for i in range(225)) + ","
    + ",".join(f"pb{i}" for i in range(225)) + ","
    + ",".join(f"ib{i}" for i in range(225)) + ","
    + ",".join(f"sb{i}" for i in range(15)) + ","
    + "lat,lon,alt,vn,ve,vd,q0,q1,q2,q3,noinfo"
)

FUSION_ROW_LEN = 1 + 15 + 15 + 225 + 225 + 225 + 15 + 10 + 1


def write_fusion_trace(path, trace: FilterTrace, backward: BackwardResult) -> None:
    """Export everything the correction trainer needs, one row per epoch."""
    n = len(trace)
    rows = np.zeros((n, FUSION_ROW_LEN))
    rows[:, 0] = trace.t
    rows[:, 1:16] = trace.dx
    rows[:, 16:31] = backward.dx_b
    for k in range(n):
        rows[k, 31:256] = trace.p_plus[k].ravel(order="F")
        rows[k, 256:481] = backward.p_b[k].ravel(order="F")
        rows[k, 481:706] = backward.info[k].ravel(order="F")
        rows[k, 721:731] = [*trace.pos_geo[k], *trace.vel_ned[k], *quat_from_rot(trace.att[k])]
    rows[:, 706:721] = backward.s
    rows[:, 731] = backward.no_info.astype(float)
    _write_table(path, _FUSION_HEADER, rows)
