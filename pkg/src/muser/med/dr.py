"""Dimensionality reduction of element slices for the regularizer.

One shared transformer reads the transposed slice (batch, l, N): each of the
l latent dimensions becomes a row whose feature width is the sequence length
N. The output row at position 0 is the reduced vector z_DR of shape
(batch, N) — one scalar per time step.

The ablation mode replaces the transformer with a per-step mean over the l
latent dimensions.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from ..numerics import Module, PositionalEmbedding, Tensor, TransformerStack
from ..numerics import tensor as T


class DrModel(Module):
    def __init__(self, l: int, n_width: int, heads: int, ff: int, layers: int,
                 rng: np.random.Generator, dropout: float = 0.0):
        if n_width % heads != 0:
            raise ShapeError(
                f"DR width {n_width} (the sequence length) must divide by {heads} heads"
            )
        self.l = l
        self.n_width = n_width
        self.pos = PositionalEmbedding(l, n_width, rng)
        self.stack = TransformerStack(
            layers, n_width, heads, ff, rng, causal=False, dropout=dropout
        )

    def __call__(self, slice_t: Tensor,
                 train_rng: np.random.Generator | None = None) -> Tensor:
        """(batch, l, N) -> (batch, N), reading the output at row 0."""
        b, l, n = slice_t.shape
        if n != self.n_width:
            raise ShapeError(
                f"sequence length {n} differs from the DR feature width {self.n_width}"
            )
        if l != self.l:
            raise ShapeError(f"slice has {l} rows, DR expects {self.l}")
        x = T.add(slice_t, self.pos(l))
        h = self.stack(x, train_rng=train_rng)
        first = T.slice_axis(h, 1, 0, 1)
        return T.reshape(first, (b, n))


def dr_reduce(
    z_slices: dict[str, Tensor],
    model: DrModel | None,
    mode: str = "transformer",
    train_rng: np.random.Generator | None = None,
) -> dict[str, Tensor]:
    """Reduce each (batch, N, l) slice to (batch, N).

    transformer mode batches all elements through the shared model in one
    pass; mean mode averages the l dims per step.
    """
    names = list(z_slices)
    if mode == "mean":
        return {name: T.reduce_mean(z_slices[name], axis=-1) for name in names}
    if mode != "transformer":
        raise ShapeError(f"unknown DR mode {mode!r}")
    if model is None:
        raise ShapeError("transformer DR mode needs a model")
    stacked = T.concat([z_slices[name] for name in names], axis=0)
    b_total, n, l = stacked.shape
    transposed = T.transpose(stacked, (0, 2, 1))
    reduced = model(transposed, train_rng=train_rng)
    per = b_total // len(names)
    return {
        name: T.slice_axis(reduced, 0, i * per, (i + 1) * per)
        for i, name in enumerate(names)
    }
