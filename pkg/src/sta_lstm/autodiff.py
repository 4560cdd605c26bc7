"""Reverse-mode automatic differentiation over dense float64 arrays.

Every operation evaluates eagerly with numpy and, when an operand
participates in differentiation, records its operands plus a closure that
pushes gradients one step backward. ``backward`` replays those closures once
in reverse topological order, so gradients accumulate additively across
fan-out. Operations whose operands are all constants fold to plain constants
and record nothing.

The graph is implicit: each result keeps references to the tensors it was
computed from. A graph must be driven from a single thread; tensors that
belong to unrelated graphs can be used concurrently.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DimensionError, NumericError

__all__ = [
    "Tensor",
    "add",
    "sub",
    "mul",
    "matmul",
    "tanh",
    "sigmoid",
    "relu",
    "softmax",
    "clamp_min",
    "pick",
    "backward",
    "topo_order",
    "grad_check",
]


class Tensor:
    """A dense float64 array plus the bookkeeping needed for backprop.

    ``grad`` accumulates; it starts at zero for tensors built with
    ``requires_grad=True`` and is allocated on demand for intermediates.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backprop")

    def __init__(self, values, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(values, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backprop: Callable[[], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad[...] = 0.0

    def __repr__(self) -> str:
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    # Arithmetic sugar; all of it defers to the module-level operations.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self) -> "Tensor":
        """Sum of all elements, as a scalar tensor."""
        x = self
        data = np.asarray(x.data.sum())
        if not x.requires_grad:
            return _constant(data)
        out = _result(data, (x,))

        def backprop():
            _bump(x, out.grad)  # a 0-d gradient broadcasts over the operand

        out._backprop = backprop
        return out

    def abs(self) -> "Tensor":
        """Elementwise absolute value; the derivative at 0 is taken as 0."""
        x = self
        data = np.abs(x.data)
        if not x.requires_grad:
            return _constant(data)
        out = _result(data, (x,))

        def backprop():
            _bump(x, out.grad * np.sign(x.data))

        out._backprop = backprop
        return out

    def log(self) -> "Tensor":
        x = self
        data = np.log(x.data)
        if not x.requires_grad:
            return _constant(data)
        out = _result(data, (x,))

        def backprop():
            _bump(x, out.grad / x.data)

        out._backprop = backprop
        return out

    def reshape(self, shape: tuple[int, ...]) -> "Tensor":
        x = self
        if int(np.prod(shape)) != x.data.size:
            raise DimensionError(f"reshape: cannot view shape {x.shape} as {tuple(shape)}")
        data = x.data.reshape(shape)
        if not x.requires_grad:
            return _constant(data)
        out = _result(data, (x,))

        def backprop():
            _bump(x, out.grad.reshape(x.data.shape))

        out._backprop = backprop
        return out


# ---------------------------------------------------------------------------
# construction helpers

def _constant(data: np.ndarray) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.requires_grad = False
    out.grad = None
    out.name = ""
    out._parents = ()
    out._backprop = None
    return out


def _result(data: np.ndarray, parents: tuple[Tensor, ...]) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.requires_grad = True
    out.grad = None
    out.name = ""
    out._parents = parents
    out._backprop = None
    return out


def _coerce(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return _constant(np.asarray(x, dtype=np.float64))


def _bump(t: Tensor, g) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    # Binary ops only ever broadcast a scalar, so a shape mismatch here means
    # the operand was the scalar side and the whole gradient collapses onto it.
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    if t.data.shape == g.shape:
        t.grad += g
    else:
        t.grad += g.sum()


def _check_binary(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape and a.data.size != 1 and b.data.size != 1:
        raise DimensionError(
            f"{op}: shapes {a.data.shape} and {b.data.shape} differ and neither operand is a scalar"
        )


# ---------------------------------------------------------------------------
# binary operations

def add(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    _check_binary(a, b, "add")
    data = a.data + b.data
    if not (a.requires_grad or b.requires_grad):
        return _constant(data)
    out = _result(data, (a, b))

    def backprop():
        g = out.grad
        if a.requires_grad:
            _accumulate(a, g)
        if b.requires_grad:
            _accumulate(b, g)

    out._backprop = backprop
    return out


def sub(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    _check_binary(a, b, "sub")
    data = a.data - b.data
    if not (a.requires_grad or b.requires_grad):
        return _constant(data)
    out = _result(data, (a, b))

    def backprop():
        g = out.grad
        if a.requires_grad:
            _accumulate(a, g)
        if b.requires_grad:
            _accumulate(b, -g)

    out._backprop = backprop
    return out


def mul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    _check_binary(a, b, "mul")
    data = a.data * b.data
    if not (a.requires_grad or b.requires_grad):
        return _constant(data)
    out = _result(data, (a, b))

    def backprop():
        g = out.grad
        if a.requires_grad:
            _accumulate(a, g * b.data)
        if b.requires_grad:
            _accumulate(b, g * a.data)

    out._backprop = backprop
    return out


def matmul(a, b) -> Tensor:
    """Matrix product covering the 1-D/2-D combinations numpy's ``@`` allows."""
    a, b = _coerce(a), _coerce(b)
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2):
        raise DimensionError(
            f"matmul: only 1-D and 2-D operands are supported, got shapes {a.shape} and {b.shape}"
        )
    if a.data.shape[-1] != b.data.shape[0]:
        raise DimensionError(f"matmul: inner dimensions disagree for shapes {a.shape} and {b.shape}")
    data = np.asarray(a.data @ b.data)
    if not (a.requires_grad or b.requires_grad):
        return _constant(data)
    out = _result(data, (a, b))

    def backprop():
        g = out.grad
        ad, bd = a.data, b.data
        if a.requires_grad:
            if ad.ndim == 2 and bd.ndim == 2:
                _bump(a, g @ bd.T)
            elif ad.ndim == 2:
                _bump(a, np.outer(g, bd))
            elif bd.ndim == 2:
                _bump(a, bd @ g)
            else:
                _bump(a, g * bd)
        if b.requires_grad:
            if ad.ndim == 2 and bd.ndim == 2:
                _bump(b, ad.T @ g)
            elif ad.ndim == 2:
                _bump(b, ad.T @ g)
            elif bd.ndim == 2:
                _bump(b, np.outer(ad, g))
            else:
                _bump(b, g * ad)

    out._backprop = backprop
    return out


# ---------------------------------------------------------------------------
# unary operations

def tanh(x) -> Tensor:
    x = _coerce(x)
    data = np.tanh(x.data)
    if not x.requires_grad:
        return _constant(data)
    out = _result(data, (x,))

    def backprop():
        _bump(x, out.grad * (1.0 - out.data * out.data))

    out._backprop = backprop
    return out


def sigmoid(x) -> Tensor:
    x = _coerce(x)
    data = 1.0 / (1.0 + np.exp(-x.data))
    if not x.requires_grad:
        return _constant(data)
    out = _result(data, (x,))

    def backprop():
        _bump(x, out.grad * out.data * (1.0 - out.data))

    out._backprop = backprop
    return out


def relu(x) -> Tensor:
    """max(x, 0); the subgradient at exactly 0 is taken as 0."""
    x = _coerce(x)
    data = np.maximum(x.data, 0.0)
    if not x.requires_grad:
        return _constant(data)
    out = _result(data, (x,))

    def backprop():
        _bump(x, out.grad * (x.data > 0.0))

    out._backprop = backprop
    return out


def clamp_min(x, lo: float) -> Tensor:
    """max(x, lo) elementwise; gradient passes through only where x > lo."""
    x = _coerce(x)
    data = np.maximum(x.data, lo)
    if not x.requires_grad:
        return _constant(data)
    out = _result(data, (x,))

    def backprop():
        _bump(x, out.grad * (x.data > lo))

    out._backprop = backprop
    return out


def pick(x, index: int) -> Tensor:
    """Select one element of a 1-D tensor as a scalar."""
    x = _coerce(x)
    if x.data.ndim != 1:
        raise DimensionError(f"pick: needs a 1-D tensor, got shape {x.shape}")
    if not 0 <= index < x.data.shape[0]:
        raise ContractError(f"pick: index {index} out of range for length {x.data.shape[0]}")
    data = np.asarray(x.data[index])
    if not x.requires_grad:
        return _constant(data)
    out = _result(data, (x,))

    def backprop():
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[index] += out.grad

    out._backprop = backprop
    return out


def softmax(v) -> Tensor:
    """Normalized exponentials of a 1-D tensor, computed max-shifted."""
    v = _coerce(v)
    if v.data.ndim != 1 or v.data.size == 0:
        raise DimensionError(f"softmax: needs a non-empty 1-D tensor, got shape {v.data.shape}")
    e = np.exp(v.data - v.data.max())
    data = e / e.sum()
    if not v.requires_grad:
        return _constant(data)
    out = _result(data, (v,))

    def backprop():
        g = out.grad
        s = out.data
        # Full Jacobian-vector product: ds_i = s_i * (g_i - <g, s>).
        _bump(v, s * (g - np.dot(g, s)))

    out._backprop = backprop
    return out


# ---------------------------------------------------------------------------
# graph traversal and differentiation

def topo_order(root: Tensor) -> list[Tensor]:
    """Recorded nodes reachable from ``root``, operands before consumers."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(root: Tensor) -> None:
    """Propagate d(root)/d(node) into every recorded ancestor's ``grad``.

    The root must be a scalar. Gradients add into whatever is already stored,
    so callers that want a fresh pass must zero their leaves first.
    """
    if root.data.size != 1:
        raise ContractError(f"backward: root must be a scalar, got shape {root.shape}")
    order = topo_order(root)
    if root.grad is None:
        root.grad = np.zeros_like(root.data)
    root.grad += 1.0
    for node in reversed(order):
        if node._backprop is not None:
            node._backprop()


def grad_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    eps: float = 1e-5,
    exclude: Sequence[int] = (),
) -> float:
    """Worst relative disagreement between backprop and central differences.

    ``f`` maps ``x`` to a scalar tensor and is re-evaluated at perturbed
    points, so it must be a pure function of ``x.data``. The error metric per
    coordinate is ``|analytic - numeric| / max(1, |analytic|, |numeric|)``.
    ``exclude`` lists flat indices to skip; use it for coordinates that sit on
    an activation kink where central differences are meaningless.
    """
    if not isinstance(x, Tensor) or not x.requires_grad:
        raise ContractError("grad_check: x must be a Tensor with requires_grad=True")
    skip = set(int(i) for i in exclude)

    x.zero_grad()
    out = f(x)
    if out.data.size != 1:
        raise ContractError(f"grad_check: f must return a scalar, got shape {out.shape}")
    if not np.isfinite(out.data).all():
        raise NumericError("grad_check: f(x) is not finite")
    backward(out)
    analytic = x.grad.reshape(-1).copy()

    flat = x.data.reshape(-1)
    worst = 0.0
    for i in range(flat.size):
        if i in skip:
            continue
        saved = flat[i]
        flat[i] = saved + eps
        f_plus = f(x).item()
        flat[i] = saved - eps
        f_minus = f(x).item()
        flat[i] = saved
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"grad_check: f is not finite near coordinate {i}")
        numeric = (f_plus - f_minus) / (2.0 * eps)
        denom = max(1.0, abs(analytic[i]), abs(numeric))
        err = abs(analytic[i] - numeric) / denom
        if err > worst:
            worst = err
    return worst
