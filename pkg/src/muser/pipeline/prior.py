"""Autoregressive prior over code indices, conditioned on emotion.

Input position 0 is the emotion embedding; position t >= 1 embeds code
t-1. The output at position t predicts code t, so a call with j codes
returns j+1 logit rows and the last row proposes the next code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..decode import sample_token, SamplingPolicy
from ..errors import DataError, NumericFault, ShapeError
from ..numerics import (
    AdamState,
    Embedding,
    Linear,
    Module,
    PositionalEmbedding,
    Tape,
    Tensor,
    TransformerStack,
    default_dtype,
)
from ..numerics import tensor as T
from .config import TrainConfig
from .model import MusErModel
from .train import BatchSampler, MAX_BAD_STEPS, StepResult, TokenCorpus

N_EMOTIONS = 5


class PriorModel(Module):
    def __init__(self, config: TrainConfig, rng: np.random.Generator | None = None):
        config.validate()
        self.config = config
        if rng is None:
            rng = np.random.default_rng(config.seed + 2)
        with default_dtype(config.dtype):
            self.emotion_emb = Embedding(N_EMOTIONS, config.prior_width, rng)
            self.code_emb = Embedding(config.k, config.prior_width, rng)
            self.pos = PositionalEmbedding(config.n_max + 1, config.prior_width, rng)
            self.stack = TransformerStack(
                config.prior_layers, config.prior_width, config.prior_heads,
                config.prior_ff, rng, causal=True, dropout=config.dropout,
            )
            self.head = Linear(config.prior_width, config.k, rng, zero_init=True)

    def __call__(self, codes: np.ndarray, emotions: np.ndarray,
                 train_rng: np.random.Generator | None = None) -> Tensor:
        """codes (b, j) + emotions (b,) -> logits (b, j+1, K)."""
        codes = np.asarray(codes)
        emotions = np.asarray(emotions)
        if codes.ndim != 2:
            raise ShapeError(f"expected (batch, j) codes, got {codes.shape}")
        if emotions.shape != (codes.shape[0],):
            raise ShapeError("one emotion label per batch row required")
        emo = self.emotion_emb(emotions[:, None])
        x = emo
        if codes.shape[1] > 0:
            x = T.concat([emo, self.code_emb(codes)], axis=1)
        x = T.add(x, self.pos(codes.shape[1] + 1))
        return self.head(self.stack(x, train_rng=train_rng))


def prior_loss(prior: PriorModel, codes: np.ndarray, emotions: np.ndarray,
               mask: np.ndarray,
               train_rng: np.random.Generator | None = None) -> tuple[Tensor, dict]:
    """Masked mean cross-entropy of next-code prediction over (b, n) codes."""
    b, n = codes.shape
    logits = prior(codes[:, : n - 1], emotions, train_rng)
    ce = T.cross_entropy(logits, codes)
    count = float(mask.sum())
    if count == 0:
        raise ShapeError("mask excludes every code")
    mask_f = mask.astype(logits.values.dtype)
    total = T.scale(T.reduce_sum(T.mul(ce, T.constant(mask_f))), 1.0 / count)
    pred = np.argmax(logits.values, axis=-1)
    acc = float(((pred == codes) & mask).sum() / count)
    return total, {"total": total.item(), "accuracy": acc}


def corpus_codes(model: MusErModel, corpus: TokenCorpus,
                 batch_size: int = 16) -> np.ndarray:
    """Encode+quantize the corpus once with the frozen model."""
    out = []
    for start in range(0, len(corpus), batch_size):
        codes, _ = model.encode(corpus.tokens[start : start + batch_size])
        out.append(codes)
    return np.concatenate(out, axis=0)


def train_prior(model: MusErModel, prior: PriorModel, corpus: TokenCorpus,
                steps: int | None = None, lr: float | None = None,
                rng: np.random.Generator | None = None,
                batch_size: int | None = None, log_every: int = 0,
                log=print) -> list[StepResult]:
    """Cross-entropy training of the prior on the model's corpus codes."""
    cfg = prior.config
    if (corpus.emotions < 0).any() or (corpus.emotions >= N_EMOTIONS).any():
        raise DataError("corpus emotion labels out of range")
    steps = cfg.steps if steps is None else steps
    lr = cfg.lr if lr is None else lr
    if rng is None:
        rng = np.random.default_rng(cfg.seed + 3)
    batch_size = cfg.batch_size if batch_size is None else batch_size
    codes = corpus_codes(model, corpus)
    opt = AdamState(prior.params(), lr=lr)
    sampler = BatchSampler(len(corpus), batch_size, rng)
    history: list[StepResult] = []
    bad_streak = 0
    for step in range(steps):
        idx = sampler.next_batch()
        opt.zero_grad()
        with Tape() as tape:
            total, parts = prior_loss(
                prior, codes[idx], corpus.emotions[idx], corpus.mask[idx], rng
            )
            if not np.isfinite(total.values):
                history.append(StepResult(step=step, applied=False,
                                          total=float(total.values), parts=parts))
                bad_streak += 1
                if bad_streak >= MAX_BAD_STEPS:
                    raise NumericFault(
                        f"{MAX_BAD_STEPS} consecutive non-finite steps; stopping"
                    )
                continue
            tape.backward(total)
        report = opt.step()
        history.append(StepResult(step=step, applied=report.applied,
                                  total=parts["total"], parts=parts,
                                  grads_skipped=report.skipped_nonfinite))
        bad_streak = 0
        if log_every and (step % log_every == 0 or step == steps - 1):
            log(f"step {step:6d}  prior {parts['total']:.6f}")
    return history


def sample_codes(prior: PriorModel, emotion: int, length: int,
                 rng: np.random.Generator,
                 temperature: float = 1.0) -> np.ndarray:
    """Draw a code sequence autoregressively under the emotion condition."""
    if not (0 <= emotion < N_EMOTIONS):
        raise DataError(f"emotion label {emotion} out of range")
    if not (1 <= length <= prior.config.n_max):
        raise DataError(f"length must lie in [1, {prior.config.n_max}]")
    policy = SamplingPolicy(temperature, 1.0)
    codes: list[int] = []
    emotions = np.array([emotion])
    for _ in range(length):
        logits = prior(np.array(codes, dtype=np.int64)[None], emotions)
        codes.append(sample_token(logits.values[0, -1], policy, rng))
    return np.array(codes, dtype=np.int64)
