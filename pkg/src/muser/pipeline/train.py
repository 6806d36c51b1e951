"""Corpus padding, single training steps, and the fixed-budget loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cprepr import CpSequence, TYPES
from ..errors import DataError, NumericFault
from ..numerics import AdamState, Tape
from .model import MusErModel

# Consecutive aborted steps tolerated before training stops.
MAX_BAD_STEPS = 10


@dataclass
class TokenCorpus:
    """Fixed-length token batches: sequences padded to n with end tokens."""

    tokens: np.ndarray            # (S, n, 8) int64
    mask: np.ndarray              # (S, n) bool, True on real steps
    emotions: np.ndarray          # (S,) int64
    lengths: np.ndarray           # (S,) int64

    def __len__(self) -> int:
        return self.tokens.shape[0]


def build_corpus(sequences: list[CpSequence], n: int) -> TokenCorpus:
    """Right-pad every sequence to length n with end-token rows."""
    if not sequences:
        raise DataError("corpus is empty")
    count = len(sequences)
    tokens = np.zeros((count, n, len(TYPES)), dtype=np.int64)
    mask = np.zeros((count, n), dtype=bool)
    emotions = np.zeros(count, dtype=np.int64)
    lengths = np.zeros(count, dtype=np.int64)
    for i, seq in enumerate(sequences):
        rows = seq.tokens
        if len(rows) > n:
            raise DataError(
                f"sequence {i} has {len(rows)} tokens, corpus length is {n}"
            )
        tokens[i, : len(rows)] = rows
        mask[i, : len(rows)] = True
        emotions[i] = seq.emotion
        lengths[i] = len(rows)
    return TokenCorpus(tokens=tokens, mask=mask, emotions=emotions, lengths=lengths)


@dataclass
class StepResult:
    step: int
    applied: bool
    total: float
    parts: dict = field(default_factory=dict)
    grads_skipped: bool = False


class BatchSampler:
    """Without-replacement batches from reshuffled epochs; deterministic
    given the generator state."""

    def __init__(self, n_items: int, batch_size: int, rng: np.random.Generator):
        self.n_items = n_items
        self.batch_size = min(batch_size, n_items)
        self.rng = rng
        self._queue = np.empty(0, dtype=np.int64)

    def next_batch(self) -> np.ndarray:
        while len(self._queue) < self.batch_size:
            perm = self.rng.permutation(self.n_items)
            self._queue = np.concatenate([self._queue, perm])
        out = self._queue[: self.batch_size]
        self._queue = self._queue[self.batch_size:]
        return out


def prime_codebook(model: MusErModel, corpus: TokenCorpus,
                   rng: np.random.Generator, max_rows: int = 4096) -> None:
    """Seat a fresh codebook on encoder outputs of real corpus steps.

    Entries drawn blind rarely overlap the untrained encoder's output
    cloud, and then one nearest entry absorbs every assignment until the
    dead-code reseed horizon. Seeding from data removes that cold start.
    """
    take = min(len(corpus), max(1, max_rows // corpus.tokens.shape[1]))
    tokens = corpus.tokens[:take]
    mask = corpus.mask[:take].reshape(-1)
    z = model.encoder(tokens).values
    rows = z.reshape(-1, model.config.latent_width)[mask]
    model.codebook.init_from(rows, rng)


def train_step(model: MusErModel, opt: AdamState, tokens: np.ndarray,
               mask: np.ndarray, rng: np.random.Generator | None = None,
               step: int = 0) -> StepResult:
    """One optimization step: backward, Adam on the parameters, then the
    exponential-moving-average codebook update on real steps' latents."""
    opt.zero_grad()
    with Tape() as tape:
        total, parts, aux = model.loss(tokens, mask, train_rng=rng)
        if not np.isfinite(total.values):
            return StepResult(step=step, applied=False, total=float(total.values),
                              parts=parts)
        tape.backward(total)
    report = opt.step()
    flat_mask = aux["mask"].reshape(-1)
    z_rows = aux["z_e"].reshape(-1, model.config.latent_width)[flat_mask]
    code_rows = aux["codes"].reshape(-1)[flat_mask]
    model.codebook.ema_update(z_rows, code_rows, rng=rng)
    return StepResult(step=step, applied=report.applied, total=parts["total"],
                      parts=parts, grads_skipped=report.skipped_nonfinite)


def train(model: MusErModel, corpus: TokenCorpus, steps: int | None = None,
          lr: float | None = None, rng: np.random.Generator | None = None,
          batch_size: int | None = None, finetune: bool = False,
          log_every: int = 0, log=print) -> list[StepResult]:
    """Fixed-step training run; returns the per-step loss history."""
    cfg = model.config
    steps = cfg.steps if steps is None else steps
    if lr is None:
        lr = cfg.lr_finetune if finetune else cfg.lr
    if rng is None:
        rng = np.random.default_rng(cfg.seed + 1)
    batch_size = cfg.batch_size if batch_size is None else batch_size
    opt = AdamState(model.params(), lr=lr)
    sampler = BatchSampler(len(corpus), batch_size, rng)
    if model.codebook.is_virgin():
        prime_codebook(model, corpus, rng)
    history: list[StepResult] = []
    bad_streak = 0
    for step in range(steps):
        idx = sampler.next_batch()
        result = train_step(
            model, opt, corpus.tokens[idx], corpus.mask[idx], rng, step
        )
        history.append(result)
        bad_streak = 0 if result.applied else bad_streak + 1
        if bad_streak >= MAX_BAD_STEPS:
            raise NumericFault(
                f"{MAX_BAD_STEPS} consecutive non-finite steps; stopping"
            )
        if log_every and (step % log_every == 0 or step == steps - 1):
            log(f"step {step:6d}  total {result.total:.6f}")
    return history


def teacher_accuracy(model: MusErModel, corpus: TokenCorpus,
                     batch_size: int = 16) -> dict[str, float]:
    """Teacher-forced argmax accuracy per head over real steps."""
    from ..cprepr import ELEMENTS
    from ..numerics import tensor as T

    hits = {name: 0 for name in ELEMENTS}
    seen = 0
    for start in range(0, len(corpus), batch_size):
        tokens = corpus.tokens[start : start + batch_size]
        mask = corpus.mask[start : start + batch_size]
        _, z_q = model.encode(tokens)
        logits = model.decoder.teacher_logits(tokens, T.constant(z_q))
        for col, name in enumerate(ELEMENTS):
            pred = np.argmax(logits[name].values, axis=-1)
            hits[name] += int(((pred == tokens[:, :, col]) & mask).sum())
        seen += int(mask.sum())
    return {name: hits[name] / seen for name in ELEMENTS}
