"""The full recognition network: gated input, stacked LSTM, gated fusion.

Per valid frame t the forward pass
  1. scores the joints from the spatial subnetwork's previous hidden state,
     normalizes them, and rescales each joint's 3-vector (skipped when the
     spatial gate is bypassed, where the gate is the constant 1 per joint),
  2. advances the main stack on the modulated frame and projects the top
     hidden state to one score per class,
  3. weights that projection by the temporal gate (constant 1 when bypassed)
     and adds it into the running class-score sum.
Both gate subnetworks always consume the raw frame, never the modulated one,
and each gate reads its subnetwork's state from the previous frame before the
subnetwork advances. Padded frames beyond ``valid_len`` contribute nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .attention import (
    SpatialAttnParams,
    TemporalAttnParams,
    frame_gate,
    joint_gate,
    modulate,
    spatial_scores,
)
from .autodiff import Tensor, softmax
from .errors import ContractError, DimensionError
from .recurrent import LstmParams, LstmState, lstm_step, stack_step

__all__ = ["ModelShape", "STAModel", "AttentionTrace", "forward", "predict", "zero_model"]

COORDS = 3


@dataclass
class ModelShape:
    """Static layout of a model; enough to rebuild its parameter tensors."""

    joints: int
    classes: int
    hidden: int = 100
    attn_hidden: int | None = None  # tanh bottleneck width; defaults to hidden
    main_layers: int = 3
    spatial_bypass: bool = False
    temporal_bypass: bool = False
    dropout: float = 0.0

    def __post_init__(self):
        if self.joints < 1 or self.classes < 1 or self.hidden < 1:
            raise ContractError("ModelShape: joints, classes, and hidden must be positive")
        if self.main_layers < 1:
            raise ContractError("ModelShape: needs at least one main layer")
        if not 0.0 <= self.dropout < 1.0:
            raise ContractError("ModelShape: dropout must lie in [0, 1)")

    @property
    def input_dim(self) -> int:
        return COORDS * self.joints

    @property
    def attn_size(self) -> int:
        return self.hidden if self.attn_hidden is None else self.attn_hidden


@dataclass
class STAModel:
    """Parameters plus the two bypass switches.

    A bypassed gate contributes the multiplicative constant 1 and its
    subnetwork is neither advanced nor differentiated.
    """

    spatial: SpatialAttnParams
    temporal: TemporalAttnParams
    main: list[LstmParams]
    proj_w: Tensor
    proj_b: Tensor
    spatial_bypass: bool = False
    temporal_bypass: bool = False
    dropout: float = 0.0

    @property
    def joints(self) -> int:
        return self.spatial.u_s.shape[0]

    @property
    def classes(self) -> int:
        return self.proj_w.shape[0]

    @property
    def hidden(self) -> int:
        return self.main[0].hidden_size

    @property
    def input_dim(self) -> int:
        return self.main[0].input_size

    @property
    def attn_size(self) -> int:
        return self.spatial.u_s.shape[1]

    def shape(self) -> ModelShape:
        return ModelShape(
            joints=self.joints,
            classes=self.classes,
            hidden=self.hidden,
            attn_hidden=self.attn_size,
            main_layers=len(self.main),
            spatial_bypass=self.spatial_bypass,
            temporal_bypass=self.temporal_bypass,
            dropout=self.dropout,
        )

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        yield from self.spatial.named("spatial.")
        yield from self.temporal.named("temporal.")
        for i, layer in enumerate(self.main):
            yield from layer.named(f"main.{i}.")
        yield "proj.w", self.proj_w
        yield "proj.b", self.proj_b

    def parameter_groups(self) -> dict[str, list[tuple[str, Tensor]]]:
        """Freezing granularity: the two subnetworks, and main stack + projection."""
        groups: dict[str, list[tuple[str, Tensor]]] = {"spatial": [], "temporal": [], "main": []}
        for name, t in self.named_parameters():
            head = name.split(".", 1)[0]
            groups["main" if head in ("main", "proj") else head].append((name, t))
        return groups

    def weight_tensors(self) -> list[Tensor]:
        """Every connection matrix; biases are excluded by construction."""
        return (
            self.spatial.weights()
            + self.temporal.weights()
            + [w for layer in self.main for w in layer.weights()]
            + [self.proj_w]
        )


def zero_model(shape: ModelShape) -> STAModel:
    """All-zero parameters in the given layout (checkpoint loading target)."""
    d, h, a, k, c = shape.input_dim, shape.hidden, shape.attn_size, shape.joints, shape.classes
    spatial = SpatialAttnParams(
        lstm=LstmParams.zeros(d, h),
        w_xs=Tensor(np.zeros((a, d)), requires_grad=True, name="w_xs"),
        w_hs=Tensor(np.zeros((a, h)), requires_grad=True, name="w_hs"),
        b_s=Tensor(np.zeros(a), requires_grad=True, name="b_s"),
        u_s=Tensor(np.zeros((k, a)), requires_grad=True, name="u_s"),
        b_us=Tensor(np.zeros(k), requires_grad=True, name="b_us"),
    )
    temporal = TemporalAttnParams(
        lstm=LstmParams.zeros(d, h),
        w_x=Tensor(np.zeros(d), requires_grad=True, name="w_x"),
        w_h=Tensor(np.zeros(h), requires_grad=True, name="w_h"),
        b=Tensor(np.asarray(0.0), requires_grad=True, name="b"),
    )
    main = [LstmParams.zeros(d if i == 0 else h, h) for i in range(shape.main_layers)]
    return STAModel(
        spatial=spatial,
        temporal=temporal,
        main=main,
        proj_w=Tensor(np.zeros((c, h)), requires_grad=True, name="proj.w"),
        proj_b=Tensor(np.zeros(c), requires_grad=True, name="proj.b"),
        spatial_bypass=shape.spatial_bypass,
        temporal_bypass=shape.temporal_bypass,
        dropout=shape.dropout,
    )


@dataclass
class AttentionTrace:
    """Per-valid-frame gate values, still attached to the recorded graph.

    ``alphas[t]`` is the (K,) joint distribution at frame t (all ones under
    spatial bypass); ``betas[t]`` is the scalar frame gate (1 under temporal
    bypass).
    """

    alphas: list[Tensor] = field(default_factory=list)
    betas: list[Tensor] = field(default_factory=list)

    def alpha_array(self) -> np.ndarray:
        return np.stack([a.data for a in self.alphas]) if self.alphas else np.zeros((0, 0))

    def beta_array(self) -> np.ndarray:
        return np.array([float(b.data) for b in self.betas])


def forward(
    model: STAModel,
    seq,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, Tensor, AttentionTrace]:
    """Run the network over one sequence.

    Returns ``(scores, probs, trace)`` where ``scores`` is the gate-weighted
    sum of per-frame class projections and ``probs`` its softmax.
    """
    t_valid = int(seq.valid_len)
    if t_valid < 1:
        raise ContractError("forward: sequence has no valid frames")
    frames = np.asarray(seq.frames, dtype=np.float64)
    if frames.ndim != 3 or frames.shape[2] != COORDS:
        raise DimensionError(f"forward: frames must be (T, K, 3), got {frames.shape}")
    if frames.shape[0] < t_valid:
        raise ContractError(f"forward: valid_len {t_valid} exceeds {frames.shape[0]} stored frames")
    if frames.shape[1] != model.joints:
        raise DimensionError(f"forward: sequence has {frames.shape[1]} joints, model expects {model.joints}")
    if training and model.dropout > 0.0 and rng is None:
        raise ContractError("forward: training with dropout needs a random generator")

    d = model.input_dim
    k = model.joints
    sp_state = None if model.spatial_bypass else LstmState.zeros(model.spatial.lstm.hidden_size)
    tp_state = None if model.temporal_bypass else LstmState.zeros(model.temporal.lstm.hidden_size)
    main_states = [LstmState.zeros(layer.hidden_size) for layer in model.main]
    ones_gate = Tensor(np.ones(k)) if model.spatial_bypass else None
    one = Tensor(np.asarray(1.0)) if model.temporal_bypass else None

    trace = AttentionTrace()
    scores_sum: Tensor | None = None
    for t in range(t_valid):
        x_flat = Tensor(frames[t].reshape(d))
        if model.spatial_bypass:
            alpha = ones_gate
            x_in = x_flat
        else:
            alpha = joint_gate(spatial_scores(model.spatial, x_flat, sp_state.h))
            x_in = modulate(Tensor(frames[t]), alpha).reshape((d,))
            sp_state = lstm_step(model.spatial.lstm, x_flat, sp_state)

        h_top, main_states = stack_step(model.main, x_in, main_states, model.dropout, training, rng)
        z = model.proj_w @ h_top + model.proj_b

        if model.temporal_bypass:
            beta = one
            contrib = z
        else:
            beta = frame_gate(model.temporal, x_flat, tp_state.h)
            tp_state = lstm_step(model.temporal.lstm, x_flat, tp_state)
            contrib = beta * z

        scores_sum = contrib if scores_sum is None else scores_sum + contrib
        trace.alphas.append(alpha)
        trace.betas.append(beta)

    probs = softmax(scores_sum)
    return scores_sum, probs, trace


def predict(model: STAModel, seq) -> int:
    """Most probable class; ties resolve to the smallest class index."""
    _, probs, _ = forward(model, seq, training=False)
    return int(np.argmax(probs.data))
