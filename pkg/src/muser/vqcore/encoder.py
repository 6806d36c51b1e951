"""Sequence encoder: token embeddings -> non-causal attention -> latents."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from ..numerics import (
    Embedding,
    Linear,
    Module,
    PositionalEmbedding,
    Tensor,
    TransformerStack,
)
from ..numerics import tensor as T
from ..cprepr import TYPES


class TokenEmbedder(Module):
    """Per-type embedding tables concatenated and projected to one width."""

    def __init__(self, vocab_sizes: dict[str, int], emb_sizes: dict[str, int],
                 width: int, rng: np.random.Generator):
        self.tables = {
            name: Embedding(vocab_sizes[name], emb_sizes[name], rng)
            for name in TYPES
        }
        total = sum(emb_sizes[name] for name in TYPES)
        self.proj = Linear(total, width, rng)

    def __call__(self, tokens: np.ndarray) -> Tensor:
        if tokens.ndim != 3 or tokens.shape[-1] != len(TYPES):
            raise ShapeError(f"expected (batch, N, {len(TYPES)}) tokens, got {tokens.shape}")
        parts = [self.tables[name](tokens[:, :, col]) for col, name in enumerate(TYPES)]
        return self.proj(T.concat(parts, axis=-1))


class Encoder(Module):
    """Maps (batch, N, 8) token arrays to (batch, N, L) latent rows."""

    def __init__(self, vocab_sizes: dict[str, int], emb_sizes: dict[str, int],
                 width: int, heads: int, ff: int, layers: int, n_max: int,
                 latent: int, rng: np.random.Generator, dropout: float = 0.0):
        self.embedder = TokenEmbedder(vocab_sizes, emb_sizes, width, rng)
        self.pos = PositionalEmbedding(n_max, width, rng)
        self.stack = TransformerStack(
            layers, width, heads, ff, rng, causal=False, dropout=dropout
        )
        self.to_latent = Linear(width, latent, rng)

    def __call__(self, tokens: np.ndarray,
                 train_rng: np.random.Generator | None = None) -> Tensor:
        x = T.add(self.embedder(tokens), self.pos(tokens.shape[1]))
        h = self.stack(x, train_rng=train_rng)
        return self.to_latent(h)


def commitment_loss(z_e: Tensor, z_q: np.ndarray) -> Tensor:
    """mean((z_e - sg(z_q))^2); the quantized side is a constant by type."""
    diff = T.sub(z_e, T.constant(np.asarray(z_q)))
    return T.reduce_mean(T.square(diff))
