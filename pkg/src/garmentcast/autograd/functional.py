"""Neural-network building blocks composed from the elementary tensor ops.

Sequence inputs follow the [batch, time, channels] convention.  Recurrent
cells are pure functions of (input step, state); full-sequence layers in
``nn`` unroll them explicitly over the time axis.
"""

from __future__ import annotations

import numpy as np

from .tensor import (
    ShapeError,
    Tensor,
    as_tensor,
    concat,
    matmul,
    mul,
    narrow,
    pad,
    relu,
    reshape,
    sigmoid,
    softmax,
    sub,
    tanh,
    tmean,
    transpose,
)


def affine(x, weight, bias=None) -> Tensor:
    """x @ weight (+ bias). ``x`` may carry leading batch axes."""
    out = matmul(x, weight)
    if bias is not None:
        out = out + bias
    return out


def conv1d(x, kernels, bias=None, padding: str = "valid") -> Tensor:
    """1-D convolution over the time axis.

    ``x`` is [B, T, Cin]; ``kernels`` is [K, Cin, Cout].  Valid padding yields
    T-K+1 output steps; same padding keeps T (zero-padded, K-1 split before/after).
    """
    x, kernels = as_tensor(x), as_tensor(kernels)
    if x.ndim != 3 or kernels.ndim != 3:
        raise ShapeError(f"conv1d wants x [B,T,Cin] and kernels [K,Cin,Cout], got {x.shape}, {kernels.shape}")
    if x.shape[2] != kernels.shape[1]:
        raise ShapeError(f"conv1d channel mismatch: input {x.shape[2]} vs kernel {kernels.shape[1]}")
    k = kernels.shape[0]
    if padding == "same":
        x = pad(x, 1, (k - 1) // 2, k // 2)
    elif padding != "valid":
        raise ValueError(f"unknown padding {padding!r}")
    t_out = x.shape[1] - k + 1
    if t_out < 1:
        raise ShapeError(f"conv1d window {k} longer than sequence {x.shape[1]}")
    out = None
    for j in range(k):
        tap = matmul(narrow(x, 1, j, t_out), reshape(narrow(kernels, 0, j, 1), kernels.shape[1:]))
        out = tap if out is None else out + tap
    if bias is not None:
        out = out + bias
    return out


def lstm_cell(x, h, c, w_x, w_h, b) -> tuple[Tensor, Tensor]:
    """One LSTM step. Gate order in the fused weight matrices: i, f, g, o."""
    hidden = h.shape[-1]
    z = matmul(x, w_x) + matmul(h, w_h) + b
    i = sigmoid(narrow(z, -1, 0, hidden))
    f = sigmoid(narrow(z, -1, hidden, hidden))
    g = tanh(narrow(z, -1, 2 * hidden, hidden))
    o = sigmoid(narrow(z, -1, 3 * hidden, hidden))
    c_next = f * c + i * g
    h_next = o * tanh(c_next)
    return h_next, c_next


def gru_cell(x, h, w_x_zr, w_h_zr, b_zr, w_x_n, w_h_n, b_n) -> Tensor:
    """One GRU step: update/reset gates then candidate state."""
    hidden = h.shape[-1]
    zr = matmul(x, w_x_zr) + matmul(h, w_h_zr) + b_zr
    z = sigmoid(narrow(zr, -1, 0, hidden))
    r = sigmoid(narrow(zr, -1, hidden, hidden))
    n = tanh(matmul(x, w_x_n) + r * matmul(h, w_h_n) + b_n)
    return (1.0 - z) * n + z * h


def conv_lstm_cell(x, h, c, w_x, w_h, b) -> tuple[Tensor, Tensor]:
    """One 1-D ConvLSTM step.

    ``x`` is [B, L, Cin], states are [B, L, H]; gates come from same-padded
    convolutions over the spatial axis, fused as 4H output channels (i,f,g,o).
    """
    hidden = h.shape[-1]
    z = conv1d(x, w_x, padding="same") + conv1d(h, w_h, padding="same") + b
    i = sigmoid(narrow(z, -1, 0, hidden))
    f = sigmoid(narrow(z, -1, hidden, hidden))
    g = tanh(narrow(z, -1, 2 * hidden, hidden))
    o = sigmoid(narrow(z, -1, 3 * hidden, hidden))
    c_next = f * c + i * g
    h_next = o * tanh(c_next)
    return h_next, c_next


def multi_head_self_attention(x, w_q, w_k, w_v, w_o, n_heads: int) -> Tensor:
    """Scaled dot-product self-attention with ``n_heads`` heads over [B, T, D]."""
    x = as_tensor(x)
    if x.ndim != 3:
        raise ShapeError(f"attention wants [B, T, D], got {x.shape}")
    b, t, d = x.shape
    if d % n_heads:
        raise ShapeError(f"model dim {d} not divisible by {n_heads} heads")
    d_head = d // n_heads

    def split_heads(m):
        return transpose(reshape(m, (b, t, n_heads, d_head)), (0, 2, 1, 3))

    q = split_heads(matmul(x, w_q))
    k = split_heads(matmul(x, w_k))
    v = split_heads(matmul(x, w_v))
    scores = mul(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(d_head))
    context = matmul(softmax(scores, axis=-1), v)
    merged = reshape(transpose(context, (0, 2, 1, 3)), (b, t, d))
    return matmul(merged, w_o)


def additive_attention(query, keys, w_query, w_key, v) -> tuple[Tensor, np.ndarray]:
    """Single-head additive attention.

    ``query`` is [B, H], ``keys`` is [B, R, D].  Scores are
    v . tanh(W_q q + W_k k_i); returns the context vector [B, D] and the
    attention weights as a plain array for inspection.
    """
    keys = as_tensor(keys)
    if keys.ndim != 3:
        raise ShapeError(f"additive attention wants keys [B, R, D], got {keys.shape}")
    b, r, d = keys.shape
    q_proj = reshape(matmul(query, w_query), (b, 1, w_query.shape[1]))
    k_proj = matmul(keys, w_key)
    scores = reshape(matmul(tanh(q_proj + k_proj), v), (b, r))
    weights = softmax(scores, axis=-1)
    context = reshape(matmul(reshape(weights, (b, 1, r)), keys), (b, d))
    return context, weights.data


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    mu = tmean(x, axis=-1, keepdims=True)
    centered = sub(x, mu)
    var = tmean(centered * centered, axis=-1, keepdims=True)
    inv = (var + eps) ** -0.5
    return centered * inv * gamma + beta


def mean_pool(x, axis: int = 1) -> Tensor:
    """Mean over one axis; doubles as global average pooling over time."""
    return tmean(x, axis=axis)


def mlp(x, layers: list[tuple[Tensor, Tensor]]) -> Tensor:
    """Stack of ReLU-activated affine layers."""
    out = x
    for w, b in layers:
        out = relu(affine(out, w, b))
    return out


def sinusoidal_positions(t: int, d: int) -> np.ndarray:
    """Fixed sine/cosine positional encodings, shape [t, d]."""
    pos = np.arange(t, dtype=np.float64)[:, None]
    dim = np.arange(d, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * (dim // 2) / d)
    enc = np.where(dim % 2 == 0, np.sin(angles), np.cos(angles))
    return enc
