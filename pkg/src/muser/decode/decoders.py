"""Decoder components: global hidden-state decoder and per-element heads."""

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
from ..vqcore import TokenEmbedder

COND_MODES = ("cross_attention", "concat")


class GlobalDecoder(Module):
    """Causal decoder over token history, conditioned on quantized latents.

    Teacher forcing shifts inputs right: position t reads the embedding of
    token t-1 (a learned start vector at t=0) and produces the hidden state
    h_t for predicting token t. Conditioning modes:

    cross_attention: every block cross-attends (non-causally) to the
        projected latent rows, so any h_t may read any z row.
    concat: the projected latent row t is concatenated with the input
        embedding at t and fused back to the model width.
    """

    def __init__(self, vocab_sizes: dict[str, int], emb_sizes: dict[str, int],
                 width: int, heads: int, ff: int, layers: int, n_max: int,
                 latent_width: int, cond_mode: str, rng: np.random.Generator,
                 dropout: float = 0.0):
        if cond_mode not in COND_MODES:
            raise ShapeError(f"unknown conditioning mode {cond_mode!r}")
        self.cond_mode = cond_mode
        self.width = width
        self.embedder = TokenEmbedder(vocab_sizes, emb_sizes, width, rng)
        self.start = T.parameter(rng.normal(0.0, 0.02, (width,)))
        self.pos = PositionalEmbedding(n_max, width, rng)
        self.z_proj = Linear(latent_width, width, rng)
        self.fuse = (
            Linear(2 * width, width, rng) if cond_mode == "concat" else None
        )
        self.stack = TransformerStack(
            layers, width, heads, ff, rng, causal=True,
            cross=(cond_mode == "cross_attention"), dropout=dropout,
        )

    def _shift_right(self, tokens: np.ndarray) -> Tensor:
        m, n, _ = tokens.shape
        start = T.reshape(self.start, (1, 1, self.width))
        start = T.add(start, T.constant(np.zeros((m, 1, self.width))))
        if n == 1:
            return start
        emb = self.embedder(tokens[:, : n - 1])
        return T.concat([start, emb], axis=1)

    def __call__(self, tokens: np.ndarray, z_q: Tensor,
                 train_rng: np.random.Generator | None = None) -> Tensor:
        """tokens (m, n, 8) + z_q (m, n_z, L) -> hidden states (m, n, width).

        concat mode needs one latent row per input position (n_z == n);
        cross_attention mode attends to however many latent rows exist, so a
        token prefix may be decoded against the full latent sequence.
        """
        m, n, _ = tokens.shape
        if z_q.shape[0] != m:
            raise ShapeError(f"latents {z_q.shape} do not align with tokens {tokens.shape}")
        if self.cond_mode == "concat" and z_q.shape[1] != n:
            raise ShapeError("concat conditioning needs one latent row per position")
        x = self._shift_right(tokens)
        zp = self.z_proj(z_q)
        if self.cond_mode == "concat":
            x = self.fuse(T.concat([x, zp], axis=-1))
            mem = None
        else:
            mem = zp
        x = T.add(x, self.pos(n))
        return self.stack(x, mem=mem, train_rng=train_rng)


class ElementDecoder(Module):
    """Per-element causal refinement over fused inputs.

    Input at step t: Linear(z slice row t) + h_t (when a global decoder is
    present) + family embedding of the token being predicted (stage-two
    context; absent for the family head itself).
    """

    def __init__(self, vocab_size: int, width: int, heads: int, ff: int,
                 layers: int, l: int, n_max: int, rng: np.random.Generator,
                 with_family_context: bool, dropout: float = 0.0):
        self.z_lin = Linear(l, width, rng)
        self.fam = Embedding(4, width, rng) if with_family_context else None
        self.pos = PositionalEmbedding(n_max, width, rng)
        self.stack = TransformerStack(
            layers, width, heads, ff, rng, causal=True, dropout=dropout
        )
        self.head = Linear(width, vocab_size, rng, zero_init=True)

    def __call__(self, h: Tensor | None, z_slice: Tensor,
                 family_context: np.ndarray | None = None,
                 train_rng: np.random.Generator | None = None) -> Tensor:
        x = self.z_lin(z_slice)
        if h is not None:
            x = T.add(x, h)
        if self.fam is not None:
            if family_context is None:
                raise ShapeError("element decoder needs the predicted family")
            x = T.add(x, self.fam(family_context))
        x = T.add(x, self.pos(x.shape[1]))
        return self.head(self.stack(x, train_rng=train_rng))


class LinearHead(Module):
    """Per-element linear readout used when only the global decoder runs."""

    def __init__(self, width: int, vocab_size: int, rng: np.random.Generator):
        self.head = Linear(width, vocab_size, rng, zero_init=True)

    def __call__(self, h: Tensor) -> Tensor:
        return self.head(h)
