"""Adam optimizer with bias correction."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class MissingGradientError(RuntimeError):
    """A parameter had no gradient when the optimizer tried to update it."""


class Adam:
    """Standard Adam over a named parameter dict.

    Keeps per-parameter first/second moment buffers matching parameter shapes;
    ``step_count`` increases by exactly one per ``step()``.
    """

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self._v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self) -> None:
        missing = [k for k, p in self.params.items() if p.grad is None]
        if missing:
            raise MissingGradientError(f"no gradient for parameter(s): {', '.join(sorted(missing))}")
        self.step_count += 1
        t = self.step_count
        for k, p in self.params.items():
            g = p.grad
            m = self._m[k]
            v = self._v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
              state: Adam) -> None:
    """Apply one Adam update from explicit gradients (sets ``p.grad`` then steps)."""
    for k, p in state.params.items():
        if k not in grads:
            raise MissingGradientError(f"no gradient for parameter(s): {k}")
        p.grad = np.asarray(grads[k], dtype=np.float64)
    state.step()
