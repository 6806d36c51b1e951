"""Adam optimizer with bias correction.

update = lr * m_hat / (sqrt(v_hat) + eps), applied in place to parameter
values. A step with any non-finite gradient is skipped whole and counted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


@dataclass
class StepReport:
    applied: bool
    skipped_nonfinite: bool = False


class AdamState:
    def __init__(self, params: list[Tensor], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.values) for p in params]
        self.v = [np.zeros_like(p.values) for p in params]
        self.skipped = 0

    def step(self) -> StepReport:
        """Apply one update from accumulated .grad; clears nothing itself."""
        grads = []
        for p in self.params:
            g = p.grad
            if g is None:
                g = np.zeros_like(p.values)
            elif not np.isfinite(g).all():
                self.skipped += 1
                return StepReport(applied=False, skipped_nonfinite=True)
            grads.append(g)
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            m_hat = m / bc1
            v_hat = v / bc2
            p.values -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return StepReport(applied=True)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
