"""LSTM cell, single-layer runner, and stacked runner with inter-layer dropout.

The cell is the peephole-free variant: input, forget, and output gates see
only the current input and the previous hidden state. A minimal tanh RNN cell
is kept alongside as a baseline for tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .autodiff import Tensor, sigmoid, tanh
from .errors import ContractError, DimensionError

__all__ = [
    "LstmParams",
    "LstmState",
    "lstm_step",
    "lstm_layer",
    "lstm_stack",
    "stack_step",
    "RnnParams",
    "rnn_step",
]

_GATE_FIELDS = (
    "w_xi", "w_hi", "b_i",
    "w_xf", "w_hf", "b_f",
    "w_xc", "w_hc", "b_c",
    "w_xo", "w_ho", "b_o",
)


@dataclass
class LstmParams:
    """One cell's parameters; each gate keeps its own input/recurrent matrix.

    ``w_x*`` are (H, D), ``w_h*`` are (H, H), biases are (H,).
    """

    w_xi: Tensor
    w_hi: Tensor
    b_i: Tensor
    w_xf: Tensor
    w_hf: Tensor
    b_f: Tensor
    w_xc: Tensor
    w_hc: Tensor
    b_c: Tensor
    w_xo: Tensor
    w_ho: Tensor
    b_o: Tensor

    @property
    def input_size(self) -> int:
        return self.w_xi.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.w_xi.shape[0]

    def named(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for field in _GATE_FIELDS:
            yield prefix + field, getattr(self, field)

    def weights(self) -> list[Tensor]:
        return [getattr(self, f) for f in _GATE_FIELDS if not f.startswith("b_")]

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmParams":
        vals = {}
        for field in _GATE_FIELDS:
            if field.startswith("b_"):
                vals[field] = Tensor(np.zeros(hidden_size), requires_grad=True, name=field)
            elif field.startswith("w_x"):
                vals[field] = Tensor(np.zeros((hidden_size, input_size)), requires_grad=True, name=field)
            else:
                vals[field] = Tensor(np.zeros((hidden_size, hidden_size)), requires_grad=True, name=field)
        return cls(**vals)

    @classmethod
    def gaussian(cls, input_size: int, hidden_size: int, rng: np.random.Generator, std: float = 0.1) -> "LstmParams":
        """Weights drawn N(0, std^2) in a fixed field order; biases zero."""
        vals = {}
        for field in _GATE_FIELDS:
            if field.startswith("b_"):
                vals[field] = Tensor(np.zeros(hidden_size), requires_grad=True, name=field)
            elif field.startswith("w_x"):
                vals[field] = Tensor(rng.normal(0.0, std, (hidden_size, input_size)), requires_grad=True, name=field)
            else:
                vals[field] = Tensor(rng.normal(0.0, std, (hidden_size, hidden_size)), requires_grad=True, name=field)
        return cls(**vals)


@dataclass
class LstmState:
    """Hidden and cell activations carried between frames."""

    h: Tensor
    c: Tensor

    @classmethod
    def zeros(cls, hidden_size: int) -> "LstmState":
        return cls(Tensor(np.zeros(hidden_size)), Tensor(np.zeros(hidden_size)))


def lstm_step(p: LstmParams, x: Tensor, state: LstmState) -> LstmState:
    """Advance the cell one frame.

    i = sigmoid(w_xi x + w_hi h + b_i)        f, o likewise
    c' = f * c + i * tanh(w_xc x + w_hc h + b_c)
    h' = o * tanh(c')
    """
    h, c = state.h, state.c
    i = sigmoid(p.w_xi @ x + p.w_hi @ h + p.b_i)
    f = sigmoid(p.w_xf @ x + p.w_hf @ h + p.b_f)
    g = tanh(p.w_xc @ x + p.w_hc @ h + p.b_c)
    o = sigmoid(p.w_xo @ x + p.w_ho @ h + p.b_o)
    c_next = f * c + i * g
    h_next = o * tanh(c_next)
    return LstmState(h_next, c_next)


def lstm_layer(p: LstmParams, xs: Sequence[Tensor], init: LstmState | None = None) -> list[LstmState]:
    """Fold the cell over a frame sequence and return every intermediate state."""
    if len(xs) == 0:
        raise ContractError("lstm_layer: needs at least one frame")
    state = init if init is not None else LstmState.zeros(p.hidden_size)
    states = []
    for x in xs:
        state = lstm_step(p, x, state)
        states.append(state)
    return states


def _dropout_tensor(shape: tuple[int, ...], rate: float, rng: np.random.Generator) -> Tensor:
    # Inverted dropout: the mask rescales survivors so eval needs no scaling.
    keep = 1.0 - rate
    return Tensor((rng.random(shape) < keep) / keep)


def stack_step(
    layers: Sequence[LstmParams],
    x: Tensor,
    states: Sequence[LstmState],
    dropout_rate: float = 0.0,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, list[LstmState]]:
    """Advance every layer one frame; dropout hits inter-layer activations only."""
    if training and dropout_rate > 0.0 and rng is None:
        raise ContractError("stack_step: training with dropout needs a random generator")
    inp = x
    new_states = []
    for idx, (p, s) in enumerate(zip(layers, states)):
        if idx > 0 and training and dropout_rate > 0.0:
            inp = inp * _dropout_tensor(inp.shape, dropout_rate, rng)
        s = lstm_step(p, inp, s)
        new_states.append(s)
        inp = s.h
    return inp, new_states


def lstm_stack(
    layers: Sequence[LstmParams],
    xs: Sequence[Tensor],
    dropout_rate: float = 0.0,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> list[Tensor]:
    """Run the layered stack over a sequence; returns the top layer's h per frame."""
    if len(layers) == 0:
        raise ContractError("lstm_stack: needs at least one layer")
    if len(xs) == 0:
        raise ContractError("lstm_stack: needs at least one frame")
    for prev, nxt in zip(layers, layers[1:]):
        if nxt.input_size != prev.hidden_size:
            raise DimensionError(
                f"lstm_stack: layer expects input size {nxt.input_size} "
                f"but the layer below emits {prev.hidden_size}"
            )
    states = [LstmState.zeros(p.hidden_size) for p in layers]
    tops = []
    for x in xs:
        top, states = stack_step(layers, x, states, dropout_rate, training, rng)
        tops.append(top)
    return tops


@dataclass
class RnnParams:
    """Plain tanh recurrence, kept as a reference baseline for tests."""

    w_x: Tensor
    w_h: Tensor
    b: Tensor

    @classmethod
    def gaussian(cls, input_size: int, hidden_size: int, rng: np.random.Generator, std: float = 0.1) -> "RnnParams":
        return cls(
            Tensor(rng.normal(0.0, std, (hidden_size, input_size)), requires_grad=True),
            Tensor(rng.normal(0.0, std, (hidden_size, hidden_size)), requires_grad=True),
            Tensor(np.zeros(hidden_size), requires_grad=True),
        )


def rnn_step(p: RnnParams, x: Tensor, h: Tensor) -> Tensor:
    return tanh(p.w_x @ x + p.w_h @ h + p.b)
