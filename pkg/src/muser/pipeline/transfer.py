"""Element transfer: rebuild a latent from two pieces, then decode."""

from __future__ import annotations

import numpy as np

from ..cprepr import CpSequence, ELEMENTS, TYPES
from ..errors import DataError, UsageError
from ..med import element_bounds
from .model import MusErModel


def _pad_tokens(tokens: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, len(TYPES)), dtype=np.int64)
    out[: len(tokens)] = tokens
    return out


def element_transfer(model: MusErModel, tokens_a: np.ndarray,
                     tokens_b: np.ndarray, transfer_set,
                     ) -> tuple[np.ndarray, dict]:
    """Assemble a hybrid quantized latent: transfer_set slices from B, the
    rest from A.

    Unequal lengths are handled by right-padding the shorter piece with end
    tokens before encoding, so its trailing codes are frozen end-of-piece
    latents; the report records how much padding each side received.
    """
    chosen = set(transfer_set)
    unknown = sorted(chosen - set(ELEMENTS))
    if unknown:
        raise UsageError(f"unknown transfer elements: {', '.join(unknown)}")
    tokens_a = np.asarray(tokens_a)
    tokens_b = np.asarray(tokens_b)
    n = max(len(tokens_a), len(tokens_b))
    if n > model.config.n_max:
        raise DataError(f"pieces exceed the model's n_max {model.config.n_max}")
    padded_a = _pad_tokens(tokens_a, n)
    padded_b = _pad_tokens(tokens_b, n)
    codes_a, z_a = model.encode(padded_a[None])
    codes_b, z_b = model.encode(padded_b[None])
    z_a, z_b = z_a[0], z_b[0]
    bounds = element_bounds(model.config.latent_width)
    z = z_a.copy()
    for name in chosen:
        start, stop = bounds[name]
        z[:, start:stop] = z_b[:, start:stop]
    report = {
        "length": n,
        "padding": {"a": n - len(tokens_a), "b": n - len(tokens_b)},
        "sources": {name: ("b" if name in chosen else "a") for name in ELEMENTS},
        "codes_a": codes_a[0],
        "codes_b": codes_b[0],
    }
    return z, report


def transfer_sequence(model: MusErModel, seq_a: CpSequence, seq_b: CpSequence,
                      transfer_set, rng: np.random.Generator,
                      max_len: int | None = None,
                      ) -> tuple[CpSequence, dict]:
    """Decode the hybrid latent; the emotion token comes from piece A."""
    if seq_a.vocab_preset != model.config.vocab_preset:
        raise DataError("piece A does not match the model's vocabulary preset")
    if seq_b.vocab_preset != model.config.vocab_preset:
        raise DataError("piece B does not match the model's vocabulary preset")
    z, report = element_transfer(model, seq_a.tokens, seq_b.tokens, transfer_set)
    tokens, info = model.decoder.generate(
        z, seq_a.emotion, model.policies, rng, max_len
    )
    report["generation"] = info
    out = CpSequence(tokens=tokens, vocab_preset=model.config.vocab_preset,
                     emotion=seq_a.emotion)
    return out, report
