"""Minimal dense-tensor autograd engine used by every trainable model."""

from . import functional
from .gradcheck import GradCheckReport, gradient_check, relative_error
from .optim import Adam, MissingGradientError, adam_step
from .tensor import (
    NumericError,
    ShapeError,
    Tensor,
    absolute,
    add,
    as_tensor,
    binary_cross_entropy_with_logits,
    categorical_cross_entropy_with_logits,
    concat,
    div,
    embedding,
    exp,
    l2_normalize,
    log,
    mae_loss,
    matmul,
    mse_loss,
    mul,
    narrow,
    pad,
    power,
    relu,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    sub,
    tanh,
    tmean,
    transpose,
    tsum,
)

__all__ = [
    "Adam",
    "GradCheckReport",
    "MissingGradientError",
    "NumericError",
    "ShapeError",
    "Tensor",
    "absolute",
    "adam_step",
    "add",
    "as_tensor",
    "binary_cross_entropy_with_logits",
    "categorical_cross_entropy_with_logits",
    "concat",
    "div",
    "embedding",
    "exp",
    "functional",
    "gradient_check",
    "l2_normalize",
    "log",
    "mae_loss",
    "matmul",
    "mse_loss",
    "mul",
    "narrow",
    "pad",
    "power",
    "relative_error",
    "relu",
    "reshape",
    "sigmoid",
    "softmax",
    "sqrt",
    "sub",
    "tanh",
    "tmean",
    "transpose",
    "tsum",
]
