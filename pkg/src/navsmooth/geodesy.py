"""WGS-84 geodesy helpers: curvature radii, local-tangent NED conversions.

Conventions
-----------
Geodetic positions are (latitude [rad], longitude [rad], altitude [m]),
altitude positive up. The local navigation frame is NED (north-east-down),
so an altitude increase maps to a negative "down" displacement. Gravity is
modelled as a constant 9.80665 m/s^2 pointing down.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

# WGS-84 ellipsoid
WGS84_A = 6_378_137.0                 # semi-major axis [m]
WGS84_E2 = 6.69437999014e-3           # first eccentricity squared

GRAVITY = 9.80665                     # [m/s^2], down in NED

# down-positive gravity vector in NED
GRAVITY_NED = np.array([0.0, 0.0, GRAVITY])

# latitude magnitude beyond which the east curvature term degenerates
_POLE_LIMIT = np.pi / 2 - 1e-9


def curvature_radii(lat: float) -> tuple[float, float]:
    """Meridian and prime-vertical radii of curvature at a latitude.

    Returns
    -------
    (r_n, r_e):
        ``r_n`` governs the latitude rate (north direction), ``r_e`` the
        longitude rate (east direction, before the cos(lat) factor).
    """
    s2 = np.sin(lat) ** 2
    den = 1.0 - WGS84_E2 * s2
    r_e = WGS84_A / np.sqrt(den)
    r_n = WGS84_A * (1.0 - WGS84_E2) / den**1.5
    return r_n, r_e


def _check_ref(ref) -> tuple[float, float, float]:
    lat, lon, alt = float(ref[0]), float(ref[1]), float(ref[2])
    if not np.isfinite([lat, lon, alt]).all():
        raise DomainError("reference position must be finite")
    if abs(lat) > _POLE_LIMIT:
        raise DomainError(f"latitude {lat} rad too close to a pole; east curvature singular")
    return lat, lon, alt


def pos_rate_matrix(lat: float, alt: float) -> np.ndarray:
    """Diagonal map from NED velocity to geodetic position rates.

    diag(1/(R_N+h), 1/((R_E+h) cos lat), -1): the third entry reflects the
    down-positive NED axis against the up-positive altitude.
    """
    if abs(lat) > _POLE_LIMIT:
        raise DomainError(f"latitude {lat} rad too close to a pole")
    r_n, r_e = curvature_radii(lat)
    return np.diag([1.0 / (r_n + alt), 1.0 / ((r_e + alt) * np.cos(lat)), -1.0])


def geo_to_ned(pos, ref) -> np.ndarray:
    """Local-tangent NED displacement of ``pos`` relative to ``ref``.

    Uses ellipsoid radii evaluated at ``ref``; exact inverse of
    :func:`ned_to_geo` for the same reference.
    """
    lat0, lon0, alt0 = _check_ref(ref)
    r_n, r_e = curvature_radii(lat0)
    north = (float(pos[0]) - lat0) * (r_n + alt0)
    east = (float(pos[1]) - lon0) * (r_e + alt0) * np.cos(lat0)
    down = -(float(pos[2]) - alt0)
    return np.array([north, east, down])


def ned_to_geo(ned, ref) -> tuple[float, float, float]:
    """Geodetic position displaced from ``ref`` by a local NED offset."""
    lat0, lon0, alt0 = _check_ref(ref)
    r_n, r_e = curvature_radii(lat0)
    lat = lat0 + float(ned[0]) / (r_n + alt0)
    lon = lon0 + float(ned[1]) / ((r_e + alt0) * np.cos(lat0))
    alt = alt0 - float(ned[2])
    return lat, lon, alt


def ned_units_per_state(lat: float, alt: float) -> np.ndarray:
    """Scale factors converting (dlat, dlon, dalt) to NED meters.

    Multiplying a position error in state units (rad, rad, m) elementwise by
    this vector yields (north, east, down) meters.
    """
    r_n, r_e = curvature_radii(lat)
    return np.array([r_n + alt, (r_e + alt) * np.cos(lat), -1.0])
