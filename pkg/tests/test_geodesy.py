import numpy as np
import pytest

from navsmooth.errors import DomainError
from navsmooth.geodesy import (
    WGS84_A,
    WGS84_E2,
    curvature_radii,
    geo_to_ned,
    ned_to_geo,
    ned_units_per_state,
    pos_rate_matrix,
)

REF = (np.deg2rad(32.0), np.deg2rad(34.8), 0.0)


def ecef(lat, lon, h):
    n = WGS84_A / np.sqrt(1 - WGS84_E2 * np.sin(lat) ** 2)
    return np.array([
        (n + h) * np.cos(lat) * np.cos(lon),
        (n + h) * np.cos(lat) * np.sin(lon),
        (n * (1 - WGS84_E2) + h) * np.sin(lat),
    ])


def test_identity_point():
    assert np.allclose(geo_to_ned(REF, REF), 0.0)


def test_altitude_only_offset_is_down_negative():
    p = (REF[0], REF[1], 5.0)
    assert np.allclose(geo_to_ned(p, REF), [0.0, 0.0, -5.0])


def test_latitude_offset_matches_ecef_chord():
    # independent oracle: ECEF chord length for a small pure-latitude offset
    dlat = 1e-5
    p = (REF[0] + dlat, REF[1], 0.0)
    ned = geo_to_ned(p, REF)
    chord = np.linalg.norm(ecef(*p) - ecef(*REF))
    assert ned[1] == 0.0 and ned[2] == 0.0
    assert ned[0] == pytest.approx(chord, rel=1e-4)
    # and the implied meridian radius is in the WGS-84 ballpark at 32 deg
    assert 6.34e6 < ned[0] / dlat < 6.36e6


@pytest.mark.parametrize("offset", [
    np.array([100.0, -250.0, 30.0]),
    np.array([9000.0, 9000.0, -500.0]),
    np.array([0.001, 0.002, 0.0]),
])
def test_round_trip_below_1e9_within_10km(offset):
    back = geo_to_ned(ned_to_geo(offset, REF), REF)
    assert np.abs(back - offset).max() < 1e-9


def test_pole_raises_domain_error():
    with pytest.raises(DomainError):
        geo_to_ned(REF, (np.pi / 2, 0.0, 0.0))
    with pytest.raises(DomainError):
        pos_rate_matrix(np.pi / 2, 0.0)


def test_pos_rate_matrix_signs_and_units():
    t = pos_rate_matrix(REF[0], 0.0)
    r_n, r_e = curvature_radii(REF[0])
    assert t[0, 0] == pytest.approx(1.0 / r_n)
    assert t[1, 1] == pytest.approx(1.0 / (r_e * np.cos(REF[0])))
    assert t[2, 2] == -1.0


def test_units_per_state_inverts_rate_matrix():
    units = ned_units_per_state(REF[0], 12.0)
    t = pos_rate_matrix(REF[0], 12.0)
    assert np.allclose(units * np.diag(t), 1.0)
