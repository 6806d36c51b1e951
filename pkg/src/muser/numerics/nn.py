"""Model building blocks: linear layers, linear attention, transformer stacks.

Attention uses the kernelized linear form with feature map phi(x) = elu(x)+1:
out_t = sum_s phi(q_t).phi(k_s) v_s / max(sum_s phi(q_t).phi(k_s), 1e-8),
with s ranging over all positions (non-causal) or s <= t (causal). At the
scales this package runs, the masked quadratic evaluation of that same
expression is the simplest faithful implementation.

All sequence tensors are batched 3D: (batch, positions, features).
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from ..errors import ShapeError
from . import tensor as T
from .tensor import Tensor

DENOM_FLOOR = 1e-8
INIT_SCALE = 0.02


class Module:
    """Base with reflective parameter discovery (insertion-ordered)."""

    def named_params(self) -> Iterator[tuple[str, Tensor]]:
        for name, obj in vars(self).items():
            yield from _walk(name, obj)

    def params(self) -> list[Tensor]:
        return [p for _, p in self.named_params()]

    def zero_grad(self) -> None:
        for p in self.params():
            p.grad = None


def _walk(prefix: str, obj) -> Iterator[tuple[str, Tensor]]:
    if isinstance(obj, Tensor):
        if obj.requires_grad:
            yield prefix, obj
    elif isinstance(obj, Module):
        for name, p in obj.named_params():
            yield f"{prefix}.{name}", p
    elif isinstance(obj, (list, tuple)):
        for i, el in enumerate(obj):
            yield from _walk(f"{prefix}.{i}", el)
    elif isinstance(obj, dict):
        for key, el in obj.items():
            yield from _walk(f"{prefix}.{key}", el)


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 bias: bool = True, zero_init: bool = False):
        if zero_init:
            w = np.zeros((n_in, n_out))
        else:
            w = rng.normal(0.0, INIT_SCALE, (n_in, n_out))
        self.weight = T.parameter(w)
        self.bias = T.parameter(np.zeros(n_out)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = T.matmul(x, self.weight)
        if self.bias is not None:
            y = T.add(y, self.bias)
        return y


class Embedding(Module):
    def __init__(self, n_rows: int, width: int, rng: np.random.Generator):
        self.table = T.parameter(rng.normal(0.0, INIT_SCALE, (n_rows, width)))

    def __call__(self, idx: np.ndarray) -> Tensor:
        return T.embedding(self.table, idx)


class LayerNorm(Module):
    def __init__(self, width: int):
        self.gain = T.parameter(np.ones(width))
        self.bias = T.parameter(np.zeros(width))

    def __call__(self, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.gain, self.bias)


def linear_attention(q: Tensor, k: Tensor, v: Tensor, causal: bool) -> Tensor:
    """Kernelized attention on (..., N, d) tensors.

    Causal mode requires matching query/key lengths. Rows with an all-but-
    vanishing normalizer are guarded by a 1e-8 floor.
    """
    nq, nk = q.shape[-2], k.shape[-2]
    if nq == 0 or nk == 0:
        raise ShapeError("attention over zero-length sequences is undefined")
    if causal and nq != nk:
        raise ShapeError("causal attention needs equal query/key lengths")
    phi_q = T.add_scalar(T.elu(q), 1.0)
    phi_k = T.add_scalar(T.elu(k), 1.0)
    perm = tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2)
    scores = T.matmul(phi_q, T.transpose(phi_k, perm))
    if causal:
        mask = np.tril(np.ones((nq, nk), dtype=q.values.dtype))
        scores = T.mul(scores, Tensor(mask))
    denom = T.maximum_scalar(T.reduce_sum(scores, axis=-1, keepdims=True), DENOM_FLOOR)
    return T.div(T.matmul(scores, v), denom)


class MultiHeadLinearAttention(Module):
    def __init__(self, width: int, heads: int, rng: np.random.Generator):
        if width % heads != 0:
            raise ShapeError(f"width {width} not divisible by {heads} heads")
        self.heads = heads
        self.wq = Linear(width, width, rng)
        self.wk = Linear(width, width, rng)
        self.wv = Linear(width, width, rng)
        self.wo = Linear(width, width, rng)

    def _split(self, x: Tensor) -> Tensor:
        b, n, w = x.shape
        h = self.heads
        return T.transpose(T.reshape(x, (b, n, h, w // h)), (0, 2, 1, 3))

    def __call__(self, x: Tensor, mem: Tensor | None = None,
                 causal: bool = False) -> Tensor:
        src = x if mem is None else mem
        q = self._split(self.wq(x))
        k = self._split(self.wk(src))
        v = self._split(self.wv(src))
        out = linear_attention(q, k, v, causal)
        b, h, n, dh = out.shape
        out = T.reshape(T.transpose(out, (0, 2, 1, 3)), (b, n, h * dh))
        return self.wo(out)


class FeedForward(Module):
    def __init__(self, width: int, inner: int, rng: np.random.Generator):
        self.lift = Linear(width, inner, rng)
        self.drop = Linear(inner, width, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.drop(T.relu(self.lift(x)))


class Block(Module):
    """Pre-norm transformer block; optional cross-attention sublayer."""

    def __init__(self, width: int, heads: int, inner: int, rng: np.random.Generator,
                 causal: bool, cross: bool, dropout: float):
        self.causal = causal
        self.dropout = dropout
        self.ln_self = LayerNorm(width)
        self.attn = MultiHeadLinearAttention(width, heads, rng)
        if cross:
            self.ln_cross = LayerNorm(width)
            self.cross_attn = MultiHeadLinearAttention(width, heads, rng)
        else:
            self.ln_cross = None
            self.cross_attn = None
        self.ln_ff = LayerNorm(width)
        self.ff = FeedForward(width, inner, rng)

    def _maybe_drop(self, x: Tensor, rng: np.random.Generator | None) -> Tensor:
        if rng is None or self.dropout <= 0.0:
            return x
        return T.dropout(x, self.dropout, rng)

    def __call__(self, x: Tensor, mem: Tensor | None = None,
                 train_rng: np.random.Generator | None = None) -> Tensor:
        a = self.attn(self.ln_self(x), causal=self.causal)
        x = T.add(x, self._maybe_drop(a, train_rng))
        if self.cross_attn is not None:
            if mem is None:
                raise ShapeError("cross-attention block called without memory")
            c = self.cross_attn(self.ln_cross(x), mem=mem, causal=False)
            x = T.add(x, self._maybe_drop(c, train_rng))
        f = self.ff(self.ln_ff(x))
        return T.add(x, self._maybe_drop(f, train_rng))


class TransformerStack(Module):
    """A stack of blocks with a final layer norm."""

    def __init__(self, layers: int, width: int, heads: int, inner: int,
                 rng: np.random.Generator, causal: bool, cross: bool = False,
                 dropout: float = 0.0):
        self.blocks = [
            Block(width, heads, inner, rng, causal, cross, dropout)
            for _ in range(layers)
        ]
        self.ln_out = LayerNorm(width)

    def __call__(self, x: Tensor, mem: Tensor | None = None,
                 train_rng: np.random.Generator | None = None) -> Tensor:
        for block in self.blocks:
            x = block(x, mem=mem, train_rng=train_rng)
        return self.ln_out(x)


class PositionalEmbedding(Module):
    def __init__(self, max_len: int, width: int, rng: np.random.Generator):
        self.max_len = max_len
        self.table = T.parameter(rng.normal(0.0, INIT_SCALE, (max_len, width)))

    def __call__(self, n: int) -> Tensor:
        if n > self.max_len:
            raise ShapeError(f"sequence length {n} exceeds positional table {self.max_len}")
        return T.slice_axis(self.table, 0, 0, n)
