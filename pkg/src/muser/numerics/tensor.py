"""Reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps an ndarray plus an optional gradient. A ``Tape`` records
every primitive applied to tracked tensors while it is active; ``backward``
replays the records in reverse, accumulating vector-Jacobian products into
``Tensor.grad``. Primitives called with no active tape run as plain numpy,
which is the inference path.

All primitives keep float32 arrays in float32 and float64 arrays in float64;
scalars are applied as python floats so numpy never silently promotes.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import NumericFault, ShapeError

_FLOAT_DTYPES = (np.float32, np.float64)

_default_dtype = np.float64


def set_default_dtype(name: str) -> None:
    """Set the dtype used when wrapping non-float data ('float32'/'float64')."""
    global _default_dtype
    if name not in ("float32", "float64"):
        raise ShapeError(f"unsupported dtype {name!r}")
    _default_dtype = np.float32 if name == "float32" else np.float64


def get_default_dtype() -> str:
    return "float32" if _default_dtype is np.float32 else "float64"


class default_dtype:
    """Context manager that temporarily switches the default dtype."""

    def __init__(self, name: str):
        self.name = name
        self._saved = ""

    def __enter__(self) -> "default_dtype":
        self._saved = get_default_dtype()
        set_default_dtype(self.name)
        return self

    def __exit__(self, *exc) -> None:
        set_default_dtype(self._saved)


class Tensor:
    """An ndarray with an optional accumulated gradient.

    ``requires_grad`` marks leaves whose gradient the caller wants; outputs of
    primitives are flagged automatically while a tape is active so gradients
    can flow through them.
    """

    __slots__ = ("values", "requires_grad", "grad")

    def __init__(self, values, requires_grad: bool = False):
        if isinstance(values, Tensor):
            raise ShapeError("cannot wrap a Tensor in a Tensor")
        arr = np.asarray(values)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(_default_dtype)
        self.values = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def dtype(self):
        return self.values.dtype

    def item(self) -> float:
        return float(self.values)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.values.shape}{flag})"

    # Operator sugar, delegating to the primitives below.
    def __add__(self, other):
        return add_scalar(self, float(other)) if _is_scalar(other) else add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if _is_scalar(other):
            return add_scalar(self, -float(other))
        return sub(self, other)

    def __mul__(self, other):
        return scale(self, float(other)) if _is_scalar(other) else mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return scale(self, 1.0 / float(other)) if _is_scalar(other) else div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def _is_scalar(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def constant(values, dtype=None) -> Tensor:
    """Wrap data as an untracked tensor (no gradient will ever reach it)."""
    arr = np.asarray(values)
    if dtype is not None:
        arr = arr.astype(dtype)
    return Tensor(arr)


def parameter(values, dtype=None) -> Tensor:
    """Wrap data as a trainable leaf (requires_grad=True)."""
    arr = np.asarray(values, dtype=dtype if dtype is not None else _default_dtype)
    return Tensor(arr, requires_grad=True)


class _Record:
    __slots__ = ("out", "inputs", "backward")

    def __init__(self, out: Tensor, inputs: tuple, backward: Callable | None):
        self.out = out
        self.inputs = inputs
        self.backward = backward


_TAPE_STACK: list["Tape"] = []


def _active_tape() -> "Tape | None":
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tape:
    """Records primitives in execution order; backward walks them reversed.

    Execution order is a topological order of the data-flow graph, so a single
    reverse sweep sees every consumer of a value before its producer.
    """

    def __init__(self):
        self.records: list[_Record] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc) -> None:
        popped = _TAPE_STACK.pop()
        assert popped is self

    def record(self, out: Tensor, inputs: Sequence, backward: Callable | None) -> None:
        self.records.append(_Record(out, tuple(inputs), backward))

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into .grad of every tracked tensor.

        Repeated calls add up; zero grads between steps. Raises on a
        non-scalar loss or on a record without a registered backward.
        """
        if not isinstance(loss, Tensor):
            raise ShapeError("backward expects a Tensor loss")
        if loss.values.size != 1:
            raise ShapeError(f"loss must be scalar, got shape {loss.values.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
        touched: dict[int, Tensor] = {id(loss): loss}
        for rec in reversed(self.records):
            g_out = grads.get(id(rec.out))
            if g_out is None:
                continue
            if rec.backward is None:
                raise NumericFault("tape contains a record with no registered backward")
            for inp, g in zip(rec.inputs, rec.backward(g_out)):
                if g is None or not isinstance(inp, Tensor) or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + g
                else:
                    grads[key] = g
                    touched[key] = inp
        for key, t in touched.items():
            g = grads[key]
            t.grad = g if t.grad is None else t.grad + g


def _track(out_values: np.ndarray, inputs: tuple, backward: Callable) -> Tensor:
    """Wrap a primitive's output, recording it if a tape is active."""
    out = Tensor(out_values)
    tape = _active_tape()
    if tape is not None and any(
        isinstance(t, Tensor) and t.requires_grad for t in inputs
    ):
        out.requires_grad = True
        tape.record(out, inputs, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape of a broadcast operand."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# Elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    y = a.values + b.values

    def backward(g):
        return _unbroadcast(g, a.values.shape), _unbroadcast(g, b.values.shape)

    return _track(y, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    y = a.values - b.values

    def backward(g):
        return _unbroadcast(g, a.values.shape), _unbroadcast(-g, b.values.shape)

    return _track(y, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    y = a.values * b.values
    av, bv = a.values, b.values

    def backward(g):
        return _unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)

    return _track(y, (a, b), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    av, bv = a.values, b.values
    y = av / bv

    def backward(g):
        return (
            _unbroadcast(g / bv, av.shape),
            _unbroadcast(-g * av / (bv * bv), bv.shape),
        )

    return _track(y, (a, b), backward)


def scale(x: Tensor, s: float) -> Tensor:
    s = float(s)

    def backward(g):
        return (g * s,)

    return _track(x.values * s, (x,), backward)


def add_scalar(x: Tensor, s: float) -> Tensor:
    def backward(g):
        return (g,)

    return _track(x.values + float(s), (x,), backward)


def square(x: Tensor) -> Tensor:
    v = x.values

    def backward(g):
        return (g * (2.0 * v),)

    return _track(v * v, (x,), backward)


def absolute(x: Tensor) -> Tensor:
    """|x|, with subgradient 0 at exactly zero."""
    v = x.values

    def backward(g):
        return (g * np.sign(v),)

    return _track(np.abs(v), (x,), backward)


def maximum_scalar(x: Tensor, floor: float) -> Tensor:
    """Clip from below; gradient passes only where x is strictly above the floor."""
    v = x.values
    floor = float(floor)

    def backward(g):
        return (g * (v > floor),)

    return _track(np.maximum(v, floor), (x,), backward)


# ---------------------------------------------------------------------------
# Nonlinearities
# ---------------------------------------------------------------------------


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.values)

    def backward(g):
        return (g * (1.0 - y * y),)

    return _track(y, (x,), backward)


def relu(x: Tensor) -> Tensor:
    v = x.values

    def backward(g):
        return (g * (v > 0),)

    return _track(np.maximum(v, 0.0), (x,), backward)


def elu(x: Tensor) -> Tensor:
    """elu with alpha=1: x for x>0, exp(x)-1 otherwise."""
    v = x.values
    # expm1 only sees the non-positive half so large inputs cannot overflow
    y = np.where(v > 0, v, np.expm1(np.minimum(v, 0.0)))

    def backward(g):
        return (g * np.where(v > 0, 1.0, y + 1.0),)

    return _track(y, (x,), backward)


# ---------------------------------------------------------------------------
# Linear algebra and shape ops
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    av, bv = a.values, b.values
    if av.ndim < 2 or bv.ndim < 2:
        raise ShapeError("matmul requires operands with ndim >= 2")
    y = np.matmul(av, bv)

    def backward(g):
        ga = _unbroadcast(np.matmul(g, bv.swapaxes(-1, -2)), av.shape)
        gb = _unbroadcast(np.matmul(av.swapaxes(-1, -2), g), bv.shape)
        return ga, gb

    return _track(y, (a, b), backward)


def transpose(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    inv = tuple(np.argsort(axes))

    def backward(g):
        return (g.transpose(inv),)

    return _track(x.values.transpose(axes), (x,), backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = x.values.shape

    def backward(g):
        return (g.reshape(old),)

    return _track(x.values.reshape(shape), (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    parts = [t.values for t in tensors]
    y = np.concatenate(parts, axis=axis)
    sizes = [p.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _track(y, tuple(tensors), backward)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    """Contiguous slice [start:stop) along one axis."""
    idx = [slice(None)] * x.values.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    shape = x.values.shape

    def backward(g):
        gx = np.zeros(shape, dtype=g.dtype)
        gx[idx] = g
        return (gx,)

    return _track(x.values[idx], (x,), backward)


def reduce_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    v = x.values
    y = v.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, v.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, v.shape).copy(),)

    return _track(y, (x,), backward)


def reduce_mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    v = x.values
    count = v.size if axis is None else v.shape[axis]
    y = v.mean(axis=axis, keepdims=keepdims)
    inv = 1.0 / count

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g * inv, v.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg * inv, v.shape).copy(),)

    return _track(y, (x,), backward)


# ---------------------------------------------------------------------------
# Embeddings, normalization, losses
# ---------------------------------------------------------------------------


def embedding(table: Tensor, idx: np.ndarray) -> Tensor:
    """Gather rows of ``table`` (V, E) at integer ``idx``; grad scatters back."""
    idx = np.asarray(idx)
    if idx.dtype.kind not in "iu":
        raise ShapeError("embedding indices must be integers")
    if idx.size and (idx.min() < 0 or idx.max() >= table.values.shape[0]):
        raise ShapeError("embedding index out of range")
    shape = table.values.shape

    def backward(g):
        gt = np.zeros(shape, dtype=g.dtype)
        np.add.at(gt, idx, g)
        return (gt,)

    return _track(table.values[idx], (table,), backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    v = x.values
    mu = v.mean(axis=-1, keepdims=True)
    xc = v - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    y = gain.values * xhat + bias.values

    def backward(g):
        dxhat = g * gain.values
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        gx = inv * (dxhat - m1 - xhat * m2)
        axes = tuple(range(g.ndim - 1))
        ggain = (g * xhat).sum(axis=axes).reshape(gain.values.shape)
        gbias = g.sum(axis=axes).reshape(bias.values.shape)
        return gx, ggain, gbias

    return _track(y, (x, gain, bias), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    v = x.values
    shifted = v - v.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * s).sum(axis=axis, keepdims=True)
        return (s * (g - dot),)

    return _track(s, (x,), backward)


def cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Per-position negative log-likelihood.

    logits (..., V), integer targets (...); returns losses of shape (...).
    """
    targets = np.asarray(targets)
    v = logits.values
    if targets.shape != v.shape[:-1]:
        raise ShapeError(
            f"targets shape {targets.shape} does not match logits {v.shape[:-1]}"
        )
    vocab = v.shape[-1]
    if targets.size and (targets.min() < 0 or targets.max() >= vocab):
        raise ShapeError("cross_entropy target out of range")
    m = v.max(axis=-1, keepdims=True)
    e = np.exp(v - m)
    z = e.sum(axis=-1, keepdims=True)
    logz = np.log(z) + m
    picked = np.take_along_axis(v, targets[..., None], axis=-1)
    y = (logz - picked)[..., 0]
    probs = e / z

    def backward(g):
        gl = probs * g[..., None]
        np.subtract.at(
            gl.reshape(-1, vocab),
            (np.arange(targets.size), targets.reshape(-1)),
            g.reshape(-1),
        )
        return (gl,)

    return _track(y, (logits,), backward)


# ---------------------------------------------------------------------------
# Gradient routing
# ---------------------------------------------------------------------------


def dropout(x: Tensor, p: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; call only in training mode. p=0 returns x unchanged."""
    if p <= 0.0:
        return x
    if p >= 1.0:
        raise ShapeError("dropout probability must be < 1")
    keep = (rng.random(x.values.shape) >= p).astype(x.values.dtype)
    mask = keep / (1.0 - p)

    def backward(g):
        return (g * mask,)

    return _track(x.values * mask, (x,), backward)


def stop_gradient(x: Tensor) -> Tensor:
    """Detach: same values, no gradient path."""
    return Tensor(x.values)


def straight_through(z_e: Tensor, z_q: np.ndarray) -> Tensor:
    """Forward the quantized values; route the gradient to the encoder output.

    Equivalent to z_e + sg(z_q - z_e): values are bitwise z_q, and backward
    treats the op as the identity on z_e.
    """
    z_q = np.asarray(z_q)
    if z_q.shape != z_e.values.shape:
        raise ShapeError("straight_through operands must share a shape")

    def backward(g):
        return (g,)

    return _track(z_q.copy(), (z_e,), backward)


def check_finite(x: Tensor, what: str = "value") -> Tensor:
    """Raise NumericFault if x contains non-finite entries; identity otherwise."""
    if not np.isfinite(x.values).all():
        raise NumericFault(f"non-finite {what} encountered")
    return x


def accumulate_params(modules: Iterable) -> list[Tensor]:
    out = []
    for m in modules:
        out.extend(p for _, p in m.named_params())
    return out
