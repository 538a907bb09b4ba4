"""Dense float64 tensors with reverse-mode automatic differentiation.

Every operation eagerly computes its forward value and, when any input
requires gradients, records a backward closure.  Calling ``backward()`` on a
scalar tensor walks the recorded graph once in reverse topological order and
accumulates gradients into every ``requires_grad`` tensor.  All values are
float64 and must stay finite; a NaN or Inf anywhere is treated as a contract
violation and raised immediately, naming the operation that produced it.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are inconsistent for the requested operation."""


class NumericError(FloatingPointError):
    """An operation produced (or was given) non-finite values."""


def _check_finite(data: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite values produced by '{op}'")


# Overflow and invalid-value warnings are redundant: any non-finite result is
# raised as NumericError by the op that produced it.
_QUIET = dict(over="ignore", invalid="ignore", divide="ignore", under="ignore")


class Tensor:
    """A node in the computation graph holding a float64 ndarray."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_inputs", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None,
                 _inputs: tuple = (), _op: str = "leaf", _backward=None):
        arr = np.asarray(data, dtype=np.float64)
        _check_finite(arr, _op)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._inputs = _inputs
        self._op = _op
        self._backward = _backward

    # ---- basic introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        tag = self.name or self._op
        return f"Tensor(shape={self.shape}, op={tag!r}, requires_grad={self.requires_grad})"

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        """A new leaf sharing this tensor's values, cut off from the graph."""
        return Tensor(self.data, requires_grad=False)

    # ---- backward pass -------------------------------------------------------

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable requires_grad tensor.

        ``self`` must be a scalar (size 1).  Each recorded node is visited
        exactly once, in reverse insertion (topological) order.
        """
        if self.size != 1:
            raise ShapeError(f"backward() requires a scalar loss, got shape {self.shape}")
        order = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward()

    # ---- operator sugar --------------------------------------------------------

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

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return power(self, p)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) != 1 or isinstance(shape[0], int) else shape[0])

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _toposort(root: Tensor) -> list[Tensor]:
    # Iterative post-order DFS: inputs always precede their consumers.
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
        for inp in node._inputs:
            if id(inp) not in visited:
                stack.append((inp, False))
    return order


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over broadcast dimensions back down to ``shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    g = _unbroadcast(g, t.data.shape)
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad += g


def _make(data: np.ndarray, inputs: tuple[Tensor, ...], op: str, backward) -> Tensor:
    requires = any(t.requires_grad for t in inputs)
    _check_finite(data, op)
    if requires:
        return Tensor(data, requires_grad=True, _inputs=inputs, _op=op, _backward=backward)
    return Tensor(data, _op=op)


# ---- elementwise arithmetic (numpy broadcasting semantics) -------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    with np.errstate(**_QUIET):
        out_data = a.data + b.data
    out = _make(out_data, (a, b), "add", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad)
            _accumulate(b, out.grad)
        out._backward = backward
    return out


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    with np.errstate(**_QUIET):
        data = a.data - b.data
    out = _make(data, (a, b), "sub", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad)
            _accumulate(b, -out.grad)
        out._backward = backward
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    with np.errstate(**_QUIET):
        data = a.data * b.data
    out = _make(data, (a, b), "mul", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad * b.data)
            _accumulate(b, out.grad * a.data)
        out._backward = backward
    return out


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    with np.errstate(**_QUIET):
        data = a.data / b.data
    out = _make(data, (a, b), "div", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad / b.data)
            _accumulate(b, -out.grad * a.data / (b.data * b.data))
        out._backward = backward
    return out


def power(a, p: float) -> Tensor:
    a = as_tensor(a)
    with np.errstate(**_QUIET):
        data = a.data ** p
    out = _make(data, (a,), f"power({p})", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad * p * a.data ** (p - 1))
        out._backward = backward
    return out


# ---- linear algebra -----------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs >=2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    with np.errstate(**_QUIET):
        data = a.data @ b.data
    out = _make(data, (a, b), "matmul", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad @ np.swapaxes(b.data, -1, -2))
            _accumulate(b, np.swapaxes(a.data, -1, -2) @ out.grad)
        out._backward = backward
    return out


def transpose(a, axes: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    out = _make(np.transpose(a.data, axes), (a,), "transpose", None)
    if out.requires_grad:
        inverse = tuple(np.argsort(axes))

        def backward():
            _accumulate(a, np.transpose(out.grad, inverse))
        out._backward = backward
    return out


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = _make(a.data.reshape(shape), (a,), "reshape", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad.reshape(a.data.shape))
        out._backward = backward
    return out


def narrow(a, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice of ``length`` elements along ``axis``, starting at ``start``."""
    a = as_tensor(a)
    if start < 0 or start + length > a.shape[axis]:
        raise ShapeError(
            f"narrow [{start}:{start + length}) out of range for axis {axis} of shape {a.shape}")
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)
    out = _make(a.data[index], (a,), "narrow", None)
    if out.requires_grad:
        def backward():
            full = np.zeros_like(a.data)
            full[index] = out.grad
            _accumulate(a, full)
        out._backward = backward
    return out


def pad(a, axis: int, before: int, after: int) -> Tensor:
    """Zero-pad along one axis."""
    a = as_tensor(a)
    widths = [(0, 0)] * a.ndim
    widths[axis] = (before, after)
    out = _make(np.pad(a.data, widths), (a,), "pad", None)
    if out.requires_grad:
        index = [slice(None)] * a.ndim
        index[axis] = slice(before, before + a.shape[axis])
        index = tuple(index)

        def backward():
            _accumulate(a, out.grad[index])
        out._backward = backward
    return out


def concat(tensors: Iterable[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeError("concat of zero tensors")
    out = _make(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), "concat", None)
    if out.requires_grad:
        sizes = [p.shape[axis] for p in parts]
        offsets = np.cumsum([0] + sizes)

        def backward():
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                index = [slice(None)] * out.grad.ndim
                index[axis] = slice(lo, hi)
                _accumulate(p, out.grad[tuple(index)])
        out._backward = backward
    return out


# ---- reductions -----------------------------------------------------------------

def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), "sum", None)
    if out.requires_grad:
        def backward():
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            _accumulate(a, np.broadcast_to(g, a.data.shape))
        out._backward = backward
    return out


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


# ---- elementwise nonlinearities ---------------------------------------------------

def exp(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(**_QUIET):
        data = np.exp(a.data)
    out = _make(data, (a,), "exp", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad * out.data)
        out._backward = backward
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(**_QUIET):
        data = np.log(a.data)
    out = _make(data, (a,), "log", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad / a.data)
        out._backward = backward
    return out


def sqrt(a) -> Tensor:
    return power(a, 0.5)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.tanh(a.data), (a,), "tanh", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad * (1.0 - out.data * out.data))
        out._backward = backward
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    # Evaluate each branch only where it is stable to avoid overflow in exp;
    # clamp into the open interval so saturated outputs never round to 0 or 1.
    data = np.empty_like(x)
    pos = x >= 0
    with np.errstate(**_QUIET):
        data[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        data[~pos] = ex / (1.0 + ex)
    data = np.clip(data, np.finfo(np.float64).tiny, np.nextafter(1.0, 0.0))
    out = _make(data, (a,), "sigmoid", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad * out.data * (1.0 - out.data))
        out._backward = backward
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.maximum(a.data, 0.0), (a,), "relu", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad * (a.data > 0))
        out._backward = backward
    return out


def absolute(a) -> Tensor:
    a = as_tensor(a)
    out = _make(np.abs(a.data), (a,), "abs", None)
    if out.requires_grad:
        def backward():
            _accumulate(a, out.grad * np.sign(a.data))
        out._backward = backward
    return out


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)
    out = _make(data, (a,), "softmax", None)
    if out.requires_grad:
        def backward():
            y, g = out.data, out.grad
            inner = (g * y).sum(axis=axis, keepdims=True)
            _accumulate(a, y * (g - inner))
        out._backward = backward
    return out


def embedding(table: Tensor, indices) -> Tensor:
    """Row lookup into ``table`` with an integer index array.

    Output shape is ``indices.shape + (embed_dim,)``.  Indices are data, not
    graph nodes; gradients flow only into the table rows that were read.
    """
    table = as_tensor(table)
    idx = np.asarray(indices, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError(f"embedding table must be 2-D, got {table.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(
            f"embedding index out of range [0, {table.shape[0]}): min={idx.min()}, max={idx.max()}")
    out = _make(table.data[idx], (table,), "embedding", None)
    if out.requires_grad:
        def backward():
            g = np.zeros_like(table.data)
            np.add.at(g, idx.reshape(-1), out.grad.reshape(-1, table.shape[1]))
            _accumulate(table, g)
        out._backward = backward
    return out


def l2_normalize(a, axis: int = -1) -> Tensor:
    """Scale rows to unit L2 norm; all-zero rows pass through unchanged."""
    a = as_tensor(a)
    norm = np.linalg.norm(a.data, axis=axis, keepdims=True)
    safe = np.where(norm == 0.0, 1.0, norm)
    data = a.data / safe
    out = _make(data, (a,), "l2_normalize", None)
    if out.requires_grad:
        def backward():
            y, g = out.data, out.grad
            inner = (g * y).sum(axis=axis, keepdims=True)
            _accumulate(a, np.where(norm == 0.0, 0.0, (g - y * inner) / safe))
        out._backward = backward
    return out


# ---- losses ------------------------------------------------------------------------

def mse_loss(pred, target) -> Tensor:
    pred, target = as_tensor(pred), as_tensor(target)
    diff = sub(pred, target)
    return tmean(mul(diff, diff))


def mae_loss(pred, target) -> Tensor:
    return tmean(absolute(sub(as_tensor(pred), as_tensor(target))))


def binary_cross_entropy_with_logits(logits, targets) -> Tensor:
    """Mean BCE between sigmoid(logits) and targets, computed in logit space."""
    logits, targets = as_tensor(logits), as_tensor(targets)
    if logits.shape != targets.shape:
        raise ShapeError(f"BCE shapes differ: {logits.shape} vs {targets.shape}")
    x, t = logits.data, targets.data
    # softplus(x) - x*t, with softplus(x) = max(x, 0) + log1p(exp(-|x|))
    data = np.mean(np.maximum(x, 0.0) - x * t + np.log1p(np.exp(-np.abs(x))))
    out = _make(data, (logits, targets), "bce_with_logits", None)
    if out.requires_grad:
        def backward():
            s = sigmoid(Tensor(x)).data
            scale = out.grad / x.size
            _accumulate(logits, (s - t) * scale)
            _accumulate(targets, -x * scale)
        out._backward = backward
    return out


def categorical_cross_entropy_with_logits(logits, target_index) -> Tensor:
    """Mean categorical cross entropy against integer class targets.

    ``logits`` is [batch, classes]; ``target_index`` an int array of shape [batch].
    """
    logits = as_tensor(logits)
    idx = np.asarray(target_index, dtype=np.int64)
    if logits.ndim != 2 or idx.shape != (logits.shape[0],):
        raise ShapeError(
            f"cross entropy wants logits [B, C] and targets [B], got {logits.shape} and {idx.shape}")
    x = logits.data
    shifted = x - x.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1)) + x.max(axis=1)
    picked = x[np.arange(x.shape[0]), idx]
    out = _make(np.mean(lse - picked), (logits,), "cce_with_logits", None)
    if out.requires_grad:
        def backward():
            e = np.exp(shifted)
            probs = e / e.sum(axis=1, keepdims=True)
            probs[np.arange(x.shape[0]), idx] -= 1.0
            _accumulate(logits, probs * (out.grad / x.shape[0]))
        out._backward = backward
    return out
