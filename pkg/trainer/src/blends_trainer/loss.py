"""Joint mean/covariance training loss.

Four terms: Huber position error in local NED meters (reference is the
first ground-truth position in the batch, decoupling the loss from absolute
coordinates), Huber velocity error, squared Frobenius rotation error, and
the trace of the fused covariance (the minimum-variance pressure). Each
term is reported individually; monitoring only the weighted total hides
everything except position.
"""

from __future__ import annotations

import torch

from .config import ModelConfig
from .fusion import apply_corrections, geo_to_ned


def huber(residual: torch.Tensor, beta: float) -> torch.Tensor:
    """Elementwise Huber (half-quadratic inside beta), summed over the last
    axis, averaged over the rest."""
    absr = residual.abs()
    quad = 0.5 * residual**2
    lin = beta * (absr - 0.5 * beta)
    per_component = torch.where(absr <= beta, quad, lin)
    return per_component.sum(dim=-1).mean()


def bcl_terms(cfg: ModelConfig, dx_fused: torch.Tensor, p_fused: torch.Tensor,
              nominal_pos: torch.Tensor, nominal_vel: torch.Tensor, nominal_att: torch.Tensor,
              truth_pos: torch.Tensor, truth_vel: torch.Tensor, truth_att: torch.Tensor) -> dict:
    """Per-term values and the weighted total for a batch of windows."""
    pos, vel, att = apply_corrections(nominal_pos, nominal_vel, nominal_att, dx_fused)

    ref = truth_pos.reshape(-1, 3)[0].detach()
    ned_pred = geo_to_ned(pos, ref)
    ned_gt = geo_to_ned(truth_pos, ref)

    pos_term = huber(ned_gt - ned_pred, cfg.huber_beta)
    vel_term = huber(truth_vel - vel, cfg.huber_beta)
    rot_term = ((truth_att - att) ** 2).sum(dim=(-1, -2)).mean()
    cov_term = p_fused.diagonal(dim1=-2, dim2=-1).sum(-1).mean()

    total = (cfg.lambda_p * pos_term + cfg.lambda_v * vel_term
             + cfg.lambda_r * rot_term + cfg.lambda_c * cov_term)
    return {"total": total, "position": pos_term, "velocity": vel_term,
            "rotation": rot_term, "covariance": cov_term}
