"""Classification loss and the three regularizers, all graph-differentiable.

The composite per-sequence loss is

    CE  +  lambda1 * spatial_reg  +  lambda2 * temporal_reg  +  lambda3 * l1_penalty

where spatial_reg pushes every joint's average gate toward full temporal
coverage, temporal_reg is an L1 pull on the frame gates, and l1_penalty
covers connection matrices only (biases exempt). Each term can be switched
off independently, in which case it contributes exactly 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .autodiff import Tensor, clamp_min, pick
from .errors import ContractError
from .model import STAModel, AttentionTrace

__all__ = [
    "LossConfig",
    "cross_entropy",
    "spatial_reg",
    "temporal_reg",
    "l1_penalty",
    "total_loss",
]

PROB_FLOOR = 1e-12


@dataclass
class LossConfig:
    """Term weights and switches. Defaults follow the small-dataset profile."""

    lambda1: float = 0.001
    lambda2: float = 0.0001
    lambda3: float = 0.0005
    spatial_term: bool = True
    temporal_term: bool = True
    l1_term: bool = True

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0 or self.lambda3 < 0:
            raise ContractError("LossConfig: term weights must be non-negative")

    @classmethod
    def sbu_profile(cls) -> "LossConfig":
        return cls(lambda1=0.001, lambda2=0.0001, lambda3=0.0005)

    @classmethod
    def ntu_profile(cls) -> "LossConfig":
        return cls(lambda1=0.01, lambda2=0.001, lambda3=0.00005)


def cross_entropy(probs: Tensor, label: int) -> Tensor:
    """-log p[label], with p floored at 1e-12 before the log."""
    label = int(label)
    if probs.data.ndim != 1:
        raise ContractError(f"cross_entropy: probs must be 1-D, got shape {probs.shape}")
    if not 0 <= label < probs.data.shape[0]:
        raise ContractError(f"cross_entropy: label {label} out of range for {probs.data.shape[0]} classes")
    return -(clamp_min(pick(probs, label), PROB_FLOOR).log())


def _as_tensor_rows(alphas) -> list[Tensor]:
    if isinstance(alphas, np.ndarray):
        return [Tensor(row) for row in alphas]
    return list(alphas)


def spatial_reg(alphas, t_valid: int) -> Tensor:
    """sum_k (1 - mean_t alpha[t, k])^2 over the valid frames.

    Accepts the per-frame gate tensors from a trace or a plain (T, K) array.
    For rows that each sum to 1 the value is bounded below by (K-1)^2 / K,
    attained when every joint's temporal mean is uniform.
    """
    rows = _as_tensor_rows(alphas)
    if len(rows) == 0 or t_valid < 1:
        raise ContractError("spatial_reg: needs at least one valid frame")
    acc = rows[0]
    for row in rows[1:]:
        acc = acc + row
    dev = 1.0 - acc * (1.0 / t_valid)
    return (dev * dev).sum()


def temporal_reg(betas, t_valid: int) -> Tensor:
    """Mean absolute frame gate over the valid frames."""
    if isinstance(betas, np.ndarray):
        vals = [Tensor(np.asarray(float(b))) for b in betas]
    else:
        vals = list(betas)
    if len(vals) == 0 or t_valid < 1:
        raise ContractError("temporal_reg: needs at least one valid frame")
    acc = vals[0].abs()
    for b in vals[1:]:
        acc = acc + b.abs()
    return acc * (1.0 / t_valid)


def l1_penalty(model: STAModel) -> Tensor:
    """Sum of |w| over every connection matrix in all three networks."""
    acc: Tensor | None = None
    for w in model.weight_tensors():
        term = w.abs().sum()
        acc = term if acc is None else acc + term
    return acc


def total_loss(probs: Tensor, label: int, trace: AttentionTrace, model: STAModel, cfg: LossConfig) -> Tensor:
    """Per-sequence composite loss; disabled terms contribute exactly 0."""
    t_valid = len(trace.alphas)
    loss = cross_entropy(probs, label)
    if cfg.spatial_term and cfg.lambda1 > 0.0:
        loss = loss + spatial_reg(trace.alphas, t_valid) * cfg.lambda1
    if cfg.temporal_term and cfg.lambda2 > 0.0:
        loss = loss + temporal_reg(trace.betas, t_valid) * cfg.lambda2
    if cfg.l1_term and cfg.lambda3 > 0.0:
        loss = loss + l1_penalty(model) * cfg.lambda3
    return loss
