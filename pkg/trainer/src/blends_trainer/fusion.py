"""Differentiable replica of the two-filter fusion with learned corrections.

Mirrors the production fusion semantics: covariances are congruence-modified,
information is added per epoch, the correction vector is appended to the
fused error state and its outer product to the fused covariance. All inverse
operations run in a rebalanced basis (horizontal-position radians scaled by
the Earth radius) for conditioning.
"""

from __future__ import annotations

import numpy as np
import torch

from .config import N_STATE

WGS84_A = 6_378_137.0
WGS84_E2 = 6.69437999014e-3

_SCALE_NP = np.ones(N_STATE)
_SCALE_NP[0:2] = WGS84_A


def scale_vector(dtype=torch.float64) -> torch.Tensor:
    return torch.as_tensor(_SCALE_NP, dtype=dtype)


def fuse_with_corrections(p_f: torch.Tensor, info_b: torch.Tensor, dx_b: torch.Tensor,
                          d_f: torch.Tensor, d_b: torch.Tensor, c: torch.Tensor):
    """Batched fusion: returns (dx_fused, p_fused).

    Shapes: matrices (..., 15, 15), vectors (..., 15). The forward error
    estimate is zero by the reset convention, so the fused increment is
    driven by the backward information vector plus the correction.
    """
    w = scale_vector(p_f.dtype).to(p_f.device)
    w_outer = w.unsqueeze(-1) * w.unsqueeze(-2)

    pf_mod = d_f @ p_f @ d_f.transpose(-1, -2)
    pf_bal = 0.5 * (pf_mod + pf_mod.transpose(-1, -2)) * w_outer

    db_bal = w.unsqueeze(-1) * d_b / w.unsqueeze(-2)
    ib_bal = info_b / w_outer
    y = torch.linalg.solve(db_bal.transpose(-1, -2), ib_bal)
    ib_mod = torch.linalg.solve(db_bal.transpose(-1, -2), y.transpose(-1, -2)).transpose(-1, -2)
    ib_mod = 0.5 * (ib_mod + ib_mod.transpose(-1, -2))

    if_bal = torch.linalg.inv(pf_bal)
    if_bal = 0.5 * (if_bal + if_bal.transpose(-1, -2))
    ps_bal = torch.linalg.inv(if_bal + ib_mod)
    ps_bal = 0.5 * (ps_bal + ps_bal.transpose(-1, -2))

    s_mod = (ib_mod @ (dx_b * w).unsqueeze(-1)).squeeze(-1)
    dx = (ps_bal @ s_mod.unsqueeze(-1)).squeeze(-1) / w + c
    p_s = ps_bal / w_outer + c.unsqueeze(-1) * c.unsqueeze(-2)
    return dx, p_s


def so3_exp(phi: torch.Tensor) -> torch.Tensor:
    """Batched Rodrigues formula for rotation vectors (..., 3)."""
    angle = torch.linalg.norm(phi, dim=-1, keepdim=True).clamp_min(1e-300)
    axis = phi / angle
    zero = torch.zeros_like(phi[..., 0])
    k = torch.stack([
        torch.stack([zero, -axis[..., 2], axis[..., 1]], dim=-1),
        torch.stack([axis[..., 2], zero, -axis[..., 0]], dim=-1),
        torch.stack([-axis[..., 1], axis[..., 0], zero], dim=-1),
    ], dim=-2)
    angle = angle.unsqueeze(-1)
    eye = torch.eye(3, dtype=phi.dtype, device=phi.device).expand(k.shape)
    small = angle < 1e-8
    sin_t = torch.where(small, angle, torch.sin(angle))
    cos_t = torch.where(small, 0.5 * angle**2, 1.0 - torch.cos(angle))
    return eye + sin_t * k + cos_t * (k @ k)


def apply_corrections(pos_geo: torch.Tensor, vel: torch.Tensor, att: torch.Tensor,
                      dx: torch.Tensor):
    """Corrected full state given nominal components and a fused error state
    (true state = nominal minus error)."""
    pos = pos_geo - dx[..., 0:3]
    vel_c = vel - dx[..., 3:6]
    att_c = so3_exp(-dx[..., 6:9]) @ att
    return pos, vel_c, att_c


def geo_to_ned(pos_geo: torch.Tensor, ref: torch.Tensor) -> torch.Tensor:
    """Local-tangent NED displacement of geodetic positions (..., 3) from a
    single reference point (3,); radii evaluated at the reference."""
    lat0, alt0 = ref[0], ref[2]
    s2 = torch.sin(lat0) ** 2
    den = 1.0 - WGS84_E2 * s2
    r_e = WGS84_A / torch.sqrt(den)
    r_n = WGS84_A * (1.0 - WGS84_E2) / den**1.5
    north = (pos_geo[..., 0] - ref[0]) * (r_n + alt0)
    east = (pos_geo[..., 1] - ref[1]) * (r_e + alt0) * torch.cos(lat0)
    down = -(pos_geo[..., 2] - ref[2])
    return torch.stack([north, east, down], dim=-1)
