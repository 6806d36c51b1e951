"""Finite-difference verification of tape gradients.

The checker evaluates a scalar loss twice per probed coordinate (central
differences on values only, no tape) and compares against the analytic
gradient from one backward pass. Error metric per coordinate:

    |analytic - numeric| / max(1, |analytic|)

The callable must be deterministic: no dropout, no RNG consumption between
calls, and any data-dependent discreteness (argmin code assignment) frozen.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor


def grad_check_report(
    fn: Callable[[], Tensor],
    params: Sequence[tuple[str, Tensor]],
    eps: float = 1e-6,
    probes_per_tensor: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[tuple[str, float]]:
    """Return (name, max relative error) per parameter tensor.

    ``params`` are (name, tensor) pairs the loss depends on; ``fn`` recomputes
    the loss from their current values. With ``probes_per_tensor`` set, only a
    random coordinate subset of each tensor is probed.
    """
    saved = [(p, p.grad) for _, p in params]
    for _, p in params:
        p.grad = None
    with Tape() as tape:
        loss = fn()
    tape.backward(loss)
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.values))
                for name, p in params}
    for p, g in saved:
        p.grad = g

    if rng is None:
        rng = np.random.default_rng(0)
    report = []
    for name, p in params:
        flat = p.values.reshape(-1)
        size = flat.size
        if probes_per_tensor is None or probes_per_tensor >= size:
            coords = np.arange(size)
        else:
            coords = rng.choice(size, size=probes_per_tensor, replace=False)
        a_flat = analytic[name].reshape(-1)
        worst = 0.0
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            up = fn().item()
            flat[c] = orig - eps
            down = fn().item()
            flat[c] = orig
            numeric = (up - down) / (2.0 * eps)
            a = a_flat[c]
            err = abs(a - numeric) / max(1.0, abs(a))
            if err > worst:
                worst = err
        report.append((name, worst))
    return report


def grad_check(
    fn: Callable[[], Tensor],
    params: Sequence[tuple[str, Tensor]],
    eps: float = 1e-6,
    probes_per_tensor: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error across every probed coordinate of every parameter."""
    report = grad_check_report(fn, params, eps, probes_per_tensor, rng)
    return max((err for _, err in report), default=0.0)
