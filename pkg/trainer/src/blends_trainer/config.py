"""Training configuration with production defaults."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_STATE = 15
INPUT_DIM = 480


def default_wide_bounds() -> np.ndarray:
    return np.concatenate([
        [3e-7, 3e-7, 50.0],
        np.full(3, 2.0),
        np.full(3, np.pi),
        np.full(3, 0.5),
        np.full(3, 0.05),
    ])


def default_base_bounds() -> np.ndarray:
    return np.concatenate([
        [2e-7, 2e-7, 1.0],
        np.full(3, 0.50),
        np.full(3, np.pi / 180.0),
        np.full(3, 0.2),
        np.full(3, 0.002),
    ])


@dataclass
class ModelConfig:
    """Network, loss and optimization settings.

    Dimensions and rates follow the ground-vehicle defaults: a 2-layer
    encoder with 16 heads at model width 256, feed-forward width 512,
    dropout 0.1, and a 150-step non-overlapping window. Loss weights
    (position 10, velocity 0.1, rotation 0.1, covariance 0.01) and the
    Huber threshold of 5 m supervise the fused mean and covariance jointly.
    """

    layers: int = 2
    heads: int = 16
    d_model: int = 256
    d_ff: int = 512
    d_head: int = 256
    dropout: float = 0.1
    window: int = 150
    batch_size: int = 128
    lr: float = 1e-2
    weight_decay: float = 1e-6
    lambda_p: float = 10.0
    lambda_v: float = 1e-1
    lambda_r: float = 1e-1
    lambda_c: float = 1e-2
    huber_beta: float = 5.0
    alpha: float = 1e-8
    m_wide: np.ndarray = field(default_factory=default_wide_bounds)
    m_base: np.ndarray = field(default_factory=default_base_bounds)
    e_w: int = 1000
    ramp_p: float = 2.0
    seed: int = 0
    lr_factor: float = 0.1
    lr_patience: int = 10
    lr_min: float = 1e-8

    def __post_init__(self):
        self.m_wide = np.asarray(self.m_wide, dtype=float)
        self.m_base = np.asarray(self.m_base, dtype=float)
        if self.m_wide.shape != (N_STATE,) or self.m_base.shape != (N_STATE,):
            raise ValueError("bound vectors must have 15 entries")
        if not ((self.m_base > 0).all() and (self.m_base <= self.m_wide).all()):
            raise ValueError("require 0 < m_base <= m_wide")
        if self.window < 1:
            raise ValueError("window must be positive")

    def rho(self, epoch: float) -> float:
        return float(np.clip(epoch / self.e_w, 0.0, 1.0) ** self.ramp_p)

    def bounds(self, epoch: float) -> np.ndarray:
        r = self.rho(epoch)
        return (1.0 - r) * self.m_wide + r * self.m_base
