"""Temperature plus nucleus sampling with per-element policies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cprepr import ELEMENTS
from ..errors import NumericFault, UsageError


@dataclass(frozen=True)
class SamplingPolicy:
    temperature: float
    top_p: float

    def __post_init__(self):
        if not (self.temperature > 0.0):
            raise UsageError("sampling temperature must be positive")
        if not (0.0 < self.top_p <= 1.0):
            raise UsageError("top-p must lie in (0, 1]")


# The emotion field is never sampled: the first token carries the requested
# label and later tokens leave it empty.
PAPER_POLICIES: dict[str, SamplingPolicy] = {
    "family": SamplingPolicy(1.0, 0.90),
    "bar_beat": SamplingPolicy(1.2, 1.00),
    "tempo": SamplingPolicy(1.2, 0.90),
    "chord": SamplingPolicy(1.0, 0.99),
    "pitch": SamplingPolicy(1.0, 0.90),
    "duration": SamplingPolicy(2.0, 0.90),
    "velocity": SamplingPolicy(5.0, 1.00),
}

DESK_POLICIES: dict[str, SamplingPolicy] = {
    name: SamplingPolicy(1.0, 0.90) for name in ELEMENTS
}


def sampling_policies(preset: str) -> dict[str, SamplingPolicy]:
    if preset == "paper":
        return dict(PAPER_POLICIES)
    if preset == "desk":
        return dict(DESK_POLICIES)
    raise UsageError(f"unknown sampling preset {preset!r}")


def nucleus_mass(probs: np.ndarray, top_p: float) -> np.ndarray:
    """Zero out everything outside the smallest prefix of descending-sorted
    probabilities whose cumulative mass reaches top_p, then renormalize."""
    order = np.argsort(-probs, kind="stable")
    csum = np.cumsum(probs[order])
    cut = int(np.searchsorted(csum, top_p, side="left"))
    cut = min(cut, len(order) - 1)
    kept = np.zeros_like(probs)
    idx = order[: cut + 1]
    kept[idx] = probs[idx]
    return kept / kept.sum()


def sample_token(logits: np.ndarray, policy: SamplingPolicy,
                 rng: np.random.Generator,
                 forbidden: np.ndarray | None = None) -> int:
    """Draw one index from a (V,) logit row under the policy.

    forbidden: optional boolean mask of indices that must not be drawn.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise NumericFault(f"expected a logit row, got shape {logits.shape}")
    scaled = logits / policy.temperature
    if forbidden is not None:
        if forbidden.shape != logits.shape:
            raise NumericFault("forbidden mask does not match the logit row")
        scaled = np.where(forbidden, -np.inf, scaled)
    top = scaled.max()
    if not np.isfinite(top):
        raise NumericFault("every candidate index is masked or non-finite")
    probs = np.exp(scaled - top)
    probs /= probs.sum()
    probs = nucleus_mass(probs, policy.top_p)
    u = rng.random()
    return int(np.searchsorted(np.cumsum(probs), u, side="right").clip(0, len(probs) - 1))
