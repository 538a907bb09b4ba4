"""Parameterized layers over the autograd tensor ops.

Layers own their parameter tensors and expose them through ``params()`` as a
flat ``{name: Tensor}`` mapping (composites prefix child names with dots).
Weights draw from uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) using the caller's
seeded generator; biases start at zero.
"""

from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Tensor, relu

def uniform_init(rng: np.random.Generator, fan_in: int, shape: tuple[int, ...]) -> Tensor:
    bound = np.sqrt(1.0 / max(fan_in, 1))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def zeros_param(shape: tuple[int, ...]) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


class Module:
    """Minimal parameter container; subclasses fill ``_params`` and ``_children``."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._children: dict[str, "Module"] = {}

    def params(self) -> dict[str, Tensor]:
        flat = dict(self._params)
        for child_name, child in self._children.items():
            for name, p in child.params().items():
                flat[f"{child_name}.{name}"] = p
        return flat

    def zero_grad(self) -> None:
        for p in self.params().values():
            p.grad = None


class Dense(Module):
    def __init__(self, rng, in_dim: int, out_dim: int):
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        self._params["w"] = uniform_init(rng, in_dim, (in_dim, out_dim))
        self._params["b"] = zeros_param((out_dim,))

    def __call__(self, x) -> Tensor:
        return F.affine(x, self._params["w"], self._params["b"])


class Embedding(Module):
    def __init__(self, rng, vocab: int, dim: int):
        super().__init__()
        self.vocab, self.dim = vocab, dim
        self._params["table"] = uniform_init(rng, dim, (vocab, dim))

    def __call__(self, indices) -> Tensor:
        from .tensor import embedding
        return embedding(self._params["table"], indices)


class MLP(Module):
    """ReLU-activated dense stack; the last layer is also ReLU-activated."""

    def __init__(self, rng, in_dim: int, layer_dims: list[int]):
        super().__init__()
        dims = [in_dim] + list(layer_dims)
        for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
            self._children[f"layer{i}"] = Dense(rng, a, b)
        self.out_dim = dims[-1]

    def __call__(self, x) -> Tensor:
        out = x
        for i in range(len(self._children)):
            out = relu(self._children[f"layer{i}"](out))
        return out


class Conv1D(Module):
    def __init__(self, rng, kernel_size: int, in_channels: int, out_channels: int,
                 padding: str = "valid"):
        super().__init__()
        self.padding = padding
        self._params["kernels"] = uniform_init(
            rng, kernel_size * in_channels, (kernel_size, in_channels, out_channels))
        self._params["b"] = zeros_param((out_channels,))

    def __call__(self, x) -> Tensor:
        return F.conv1d(x, self._params["kernels"], self._params["b"], padding=self.padding)


class LSTM(Module):
    """LSTM unrolled explicitly over [B, T, C]; returns every hidden state."""

    def __init__(self, rng, in_dim: int, hidden: int):
        super().__init__()
        self.hidden = hidden
        self._params["w_x"] = uniform_init(rng, in_dim, (in_dim, 4 * hidden))
        self._params["w_h"] = uniform_init(rng, hidden, (hidden, 4 * hidden))
        self._params["b"] = zeros_param((4 * hidden,))

    def step(self, x_t, h, c):
        return F.lstm_cell(x_t, h, c, self._params["w_x"], self._params["w_h"], self._params["b"])

    def __call__(self, x) -> list[Tensor]:
        from .tensor import narrow, reshape
        b, t, c_in = x.shape
        h = Tensor(np.zeros((b, self.hidden)))
        c = Tensor(np.zeros((b, self.hidden)))
        states = []
        for i in range(t):
            x_t = reshape(narrow(x, 1, i, 1), (b, c_in))
            h, c = self.step(x_t, h, c)
            states.append(h)
        self.last_cell = c
        return states


class GRU(Module):
    def __init__(self, rng, in_dim: int, hidden: int):
        super().__init__()
        self.hidden = hidden
        self._params["w_x_zr"] = uniform_init(rng, in_dim, (in_dim, 2 * hidden))
        self._params["w_h_zr"] = uniform_init(rng, hidden, (hidden, 2 * hidden))
        self._params["b_zr"] = zeros_param((2 * hidden,))
        self._params["w_x_n"] = uniform_init(rng, in_dim, (in_dim, hidden))
        self._params["w_h_n"] = uniform_init(rng, hidden, (hidden, hidden))
        self._params["b_n"] = zeros_param((hidden,))

    def step(self, x_t, h) -> Tensor:
        p = self._params
        return F.gru_cell(x_t, h, p["w_x_zr"], p["w_h_zr"], p["b_zr"],
                          p["w_x_n"], p["w_h_n"], p["b_n"])

    def __call__(self, x) -> list[Tensor]:
        from .tensor import narrow, reshape
        b, t, c_in = x.shape
        h = Tensor(np.zeros((b, self.hidden)))
        states = []
        for i in range(t):
            x_t = reshape(narrow(x, 1, i, 1), (b, c_in))
            h = self.step(x_t, h)
            states.append(h)
        return states


class ConvLSTM1D(Module):
    """1-D ConvLSTM over time; input [B, T, L, Cin], hidden state [B, L, H]."""

    def __init__(self, rng, kernel_size: int, in_channels: int, hidden: int):
        super().__init__()
        self.hidden = hidden
        self._params["w_x"] = uniform_init(
            rng, kernel_size * in_channels, (kernel_size, in_channels, 4 * hidden))
        self._params["w_h"] = uniform_init(
            rng, kernel_size * hidden, (kernel_size, hidden, 4 * hidden))
        self._params["b"] = zeros_param((4 * hidden,))

    def step(self, x_t, h, c):
        return F.conv_lstm_cell(x_t, h, c, self._params["w_x"], self._params["w_h"],
                                self._params["b"])

    def __call__(self, x) -> Tensor:
        from .tensor import narrow, reshape
        b, t, l, c_in = x.shape
        h = Tensor(np.zeros((b, l, self.hidden)))
        c = Tensor(np.zeros((b, l, self.hidden)))
        for i in range(t):
            x_t = reshape(narrow(x, 1, i, 1), (b, l, c_in))
            h, c = self.step(x_t, h, c)
        return h


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self._params["gamma"] = Tensor(np.ones(dim), requires_grad=True)
        self._params["beta"] = zeros_param((dim,))

    def __call__(self, x) -> Tensor:
        return F.layer_norm(x, self._params["gamma"], self._params["beta"], eps=self.eps)


class MultiHeadSelfAttention(Module):
    def __init__(self, rng, d_model: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        for name in ("w_q", "w_k", "w_v", "w_o"):
            self._params[name] = uniform_init(rng, d_model, (d_model, d_model))

    def __call__(self, x) -> Tensor:
        p = self._params
        return F.multi_head_self_attention(x, p["w_q"], p["w_k"], p["w_v"], p["w_o"],
                                           self.n_heads)


class TransformerEncoderLayer(Module):
    """Pre-norm encoder block: attention and feed-forward with residuals."""

    def __init__(self, rng, d_model: int, n_heads: int, d_ff: int):
        super().__init__()
        self._children["attn"] = MultiHeadSelfAttention(rng, d_model, n_heads)
        self._children["norm1"] = LayerNorm(d_model)
        self._children["norm2"] = LayerNorm(d_model)
        self._children["ff1"] = Dense(rng, d_model, d_ff)
        self._children["ff2"] = Dense(rng, d_ff, d_model)

    def __call__(self, x) -> Tensor:
        c = self._children
        x = x + c["attn"](c["norm1"](x))
        return x + c["ff2"](relu(c["ff1"](c["norm2"](x))))


class AdditiveAttention(Module):
    """Single-head additive attention scoring keys against a query state."""

    def __init__(self, rng, query_dim: int, key_dim: int, hidden: int):
        super().__init__()
        self._params["w_query"] = uniform_init(rng, query_dim, (query_dim, hidden))
        self._params["w_key"] = uniform_init(rng, key_dim, (key_dim, hidden))
        self._params["v"] = uniform_init(rng, hidden, (hidden, 1))

    def __call__(self, query, keys):
        p = self._params
        return F.additive_attention(query, keys, p["w_query"], p["w_key"], p["v"])
