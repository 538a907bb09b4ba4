"""Finite-difference verification of analytic gradients.

The checker perturbs every element of every checked tensor by +/-h, rebuilds
the forward pass, and compares central differences against the gradients the
backward pass produced.  It reports rather than throws, so test suites can
assert on the outcome per parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .tensor import Tensor

# Analytic and numeric gradients below this magnitude are both treated as zero;
# central differences cannot resolve relative error against float noise there.
ZERO_BAND = 1e-7


@dataclass
class GradCheckReport:
    tolerance: float
    max_errors: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e < self.tolerance for e in self.max_errors.values())

    def failures(self) -> dict[str, float]:
        return {k: e for k, e in self.max_errors.items() if e >= self.tolerance}


def relative_error(analytic: float, numeric: float) -> float:
    if abs(analytic) < ZERO_BAND and abs(numeric) < ZERO_BAND:
        return 0.0
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric))


def gradient_check(loss_fn: Callable[[], Tensor], wrt: dict[str, Tensor],
                   h: float = 1e-5, tolerance: float = 1e-4) -> GradCheckReport:
    """Compare backward() gradients of ``loss_fn`` against central differences.

    ``loss_fn`` must rebuild the graph on every call, reading the current
    ``.data`` of the tensors in ``wrt`` (they are perturbed in place).
    """
    for t in wrt.values():
        t.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = {k: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
                for k, t in wrt.items()}

    report = GradCheckReport(tolerance=tolerance)
    for name, t in wrt.items():
        worst = 0.0
        flat = t.data.reshape(-1)
        grad_flat = analytic[name].reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = float(loss_fn().data)
            flat[i] = keep - h
            down = float(loss_fn().data)
            flat[i] = keep
            numeric = (up - down) / (2.0 * h)
            worst = max(worst, relative_error(float(grad_flat[i]), numeric))
        report.max_errors[name] = worst
    return report
