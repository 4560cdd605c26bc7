"""Joint-selection (spatial) and frame-importance (temporal) gates.

Both gates run their own single-layer LSTM over the raw, unmodulated frames.
At frame t the gate value is computed from the subnetwork's hidden state of
frame t-1, and only then is the subnetwork advanced with frame t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .autodiff import Tensor, matmul, relu, softmax, tanh
from .errors import DimensionError
from .recurrent import LstmParams

__all__ = [
    "SpatialAttnParams",
    "TemporalAttnParams",
    "spatial_scores",
    "joint_gate",
    "modulate",
    "frame_gate",
]

_ONES_ROW3 = Tensor(np.ones((1, 3)))


@dataclass
class SpatialAttnParams:
    """Per-joint score head on top of the gate LSTM.

    ``w_xs`` (A, D) and ``w_hs`` (A, H) feed a tanh bottleneck of width A;
    ``u_s`` (K, A) and the two biases turn it into one score per joint.
    """

    lstm: LstmParams
    w_xs: Tensor
    w_hs: Tensor
    b_s: Tensor
    u_s: Tensor
    b_us: Tensor

    @property
    def joints(self) -> int:
        return self.u_s.shape[0]

    def named(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        yield from self.lstm.named(prefix + "lstm.")
        for field in ("w_xs", "w_hs", "b_s", "u_s", "b_us"):
            yield prefix + field, getattr(self, field)

    def weights(self) -> list[Tensor]:
        return self.lstm.weights() + [self.w_xs, self.w_hs, self.u_s]

    @classmethod
    def gaussian(
        cls,
        input_size: int,
        joints: int,
        hidden_size: int,
        attn_size: int,
        rng: np.random.Generator,
        std: float = 0.1,
    ) -> "SpatialAttnParams":
        return cls(
            lstm=LstmParams.gaussian(input_size, hidden_size, rng, std),
            w_xs=Tensor(rng.normal(0.0, std, (attn_size, input_size)), requires_grad=True, name="w_xs"),
            w_hs=Tensor(rng.normal(0.0, std, (attn_size, hidden_size)), requires_grad=True, name="w_hs"),
            b_s=Tensor(np.zeros(attn_size), requires_grad=True, name="b_s"),
            u_s=Tensor(rng.normal(0.0, std, (joints, attn_size)), requires_grad=True, name="u_s"),
            b_us=Tensor(np.zeros(joints), requires_grad=True, name="b_us"),
        )


@dataclass
class TemporalAttnParams:
    """Scalar frame-importance head on top of the gate LSTM."""

    lstm: LstmParams
    w_x: Tensor  # (D,)
    w_h: Tensor  # (H,)
    b: Tensor    # scalar

    def named(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        yield from self.lstm.named(prefix + "lstm.")
        for field in ("w_x", "w_h", "b"):
            yield prefix + field, getattr(self, field)

    def weights(self) -> list[Tensor]:
        return self.lstm.weights() + [self.w_x, self.w_h]

    @classmethod
    def gaussian(
        cls,
        input_size: int,
        hidden_size: int,
        rng: np.random.Generator,
        std: float = 0.1,
    ) -> "TemporalAttnParams":
        return cls(
            lstm=LstmParams.gaussian(input_size, hidden_size, rng, std),
            w_x=Tensor(rng.normal(0.0, std, input_size), requires_grad=True, name="w_x"),
            w_h=Tensor(rng.normal(0.0, std, hidden_size), requires_grad=True, name="w_h"),
            b=Tensor(np.asarray(0.0), requires_grad=True, name="b"),
        )


def spatial_scores(p: SpatialAttnParams, x: Tensor, h_prev: Tensor) -> Tensor:
    """One unnormalized selection score per joint for the current frame."""
    return p.u_s @ tanh(p.w_xs @ x + p.w_hs @ h_prev + p.b_s) + p.b_us


def joint_gate(scores: Tensor) -> Tensor:
    """Normalize joint scores into a distribution over joints."""
    return softmax(scores)


def modulate(frame: Tensor, alpha: Tensor) -> Tensor:
    """Scale each joint's 3-vector by its gate weight; returns (K, 3)."""
    if frame.data.ndim != 2 or frame.data.shape[1] != 3:
        raise DimensionError(f"modulate: frame must be (K, 3), got {frame.shape}")
    k = frame.data.shape[0]
    if alpha.data.shape != (k,):
        raise DimensionError(f"modulate: gate shape {alpha.shape} does not match {k} joints")
    # Expand (K,) -> (K, 3) through a constant ones row so the product stays
    # inside the recorded graph.
    expanded = matmul(alpha.reshape((k, 1)), _ONES_ROW3)
    return expanded * frame


def frame_gate(p: TemporalAttnParams, x: Tensor, h_prev: Tensor) -> Tensor:
    """Non-negative scalar importance of the current frame."""
    return relu(p.w_x @ x + p.w_h @ h_prev + p.b)
