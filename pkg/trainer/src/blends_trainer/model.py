"""Transformer that maps fusion-trace windows to correction records."""

from __future__ import annotations

import math

import torch
from torch import nn

from .config import INPUT_DIM, N_STATE, ModelConfig


class SinusoidalPositionalEncoding(nn.Module):
    def __init__(self, d_model: int, max_len: int = 4096):
        super().__init__()
        pos = torch.arange(max_len, dtype=torch.get_default_dtype()).unsqueeze(1)
        div = torch.exp(torch.arange(0, d_model, 2, dtype=torch.get_default_dtype())
                        * (-math.log(10000.0) / d_model))
        pe = torch.zeros(max_len, d_model)
        pe[:, 0::2] = torch.sin(pos * div)
        pe[:, 1::2] = torch.cos(pos * div)
        self.register_buffer("pe", pe)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.pe[: x.shape[1]].unsqueeze(0)


class _Head(nn.Module):
    """Two linear layers with GELU and layer normalization; the output layer
    starts at zero so the whole stage is initially inert."""

    def __init__(self, d_model: int, d_head: int, d_out: int):
        super().__init__()
        self.fc = nn.Linear(d_model, d_head)
        self.act = nn.GELU()
        self.norm = nn.LayerNorm(d_head)
        self.out = nn.Linear(d_head, d_out)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.out(self.norm(self.act(self.fc(x))))


class CorrectionTransformer(nn.Module):
    """Encoder over fusion-trace windows emitting, per time step, two raw
    15x15 modification matrices and a raw 15-vector correction.

    Raw outputs are zero at initialization, so the downstream near-identity
    parameterization reduces the fusion stage exactly to the classical
    smoother at the start of training.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.input_proj = nn.Linear(INPUT_DIM, cfg.d_model)
        self.pos_enc = SinusoidalPositionalEncoding(cfg.d_model, max_len=max(cfg.window, 16))
        layer = nn.TransformerEncoderLayer(
            d_model=cfg.d_model, nhead=cfg.heads, dim_feedforward=cfg.d_ff,
            dropout=cfg.dropout, activation="gelu", batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=cfg.layers)
        self.cov_head = _Head(cfg.d_model, cfg.d_head, 2 * N_STATE * N_STATE)
        self.cor_head = _Head(cfg.d_model, cfg.d_head, N_STATE)

    def forward(self, u: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """u: (batch, window, 480) -> raw (d_f, d_b, c) per step."""
        h = self.encoder(self.pos_enc(self.input_proj(u)))
        cov = self.cov_head(h)
        b, t, _ = cov.shape
        d_f_raw = cov[..., : N_STATE * N_STATE].reshape(b, t, N_STATE, N_STATE)
        d_b_raw = cov[..., N_STATE * N_STATE:].reshape(b, t, N_STATE, N_STATE)
        c_raw = self.cor_head(h)
        return d_f_raw, d_b_raw, c_raw

    def records(self, u: torch.Tensor, bounds: torch.Tensor):
        """Bounded correction records: near-identity matrices and the
        tanh-squashed correction under the given bound vector."""
        d_f_raw, d_b_raw, c_raw = self.forward(u)
        eye = torch.eye(N_STATE, dtype=u.dtype, device=u.device)
        d_f = eye + self.cfg.alpha * torch.tanh(d_f_raw)
        d_b = eye + self.cfg.alpha * torch.tanh(d_b_raw)
        c = torch.tanh(c_raw) * bounds
        return d_f, d_b, c


def build_model(cfg: ModelConfig) -> CorrectionTransformer:
    torch.manual_seed(cfg.seed)
    return CorrectionTransformer(cfg)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
