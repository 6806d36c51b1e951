"""Primitive gradient-check case list shared by tests and the CLI.

Each case is (name, fn, params): a deterministic zero-argument closure
producing a scalar loss, plus the (name, tensor) parameters it reads.
"""

from __future__ import annotations

import numpy as np

from . import tensor as N
from .nn import linear_attention
from .tensor import Tensor


def scalarize(out: Tensor, proj: np.ndarray) -> Tensor:
    """Project an arbitrary-shaped output to a scalar with fixed weights."""
    return N.reduce_sum(N.mul(out, N.constant(proj)))


def primitive_cases(seed: int = 0):
    """Build (name, fn, params) triples for every FD-checkable primitive.

    Each fn is a zero-argument deterministic closure producing a scalar loss
    from its params. Inputs sit away from kinks (relu/elu/abs/max floors) so
    central differences are valid.
    """
    rng = np.random.default_rng(seed)

    def away_from_zero(shape, margin=0.2):
        x = rng.normal(0.0, 1.0, shape)
        return x + np.sign(x) * margin

    cases = []

    def case(name, build):
        cases.append((name, *build()))

    def unary(op, shape=(3, 4), data=None, **kw):
        x = N.parameter(rng.normal(0.0, 1.0, shape) if data is None else data)
        out_shape = op(N.constant(x.values), **kw).values.shape
        proj = rng.normal(0.0, 1.0, out_shape)

        def fn():
            return scalarize(op(x, **kw), proj)

        return fn, [("x", x)]

    case("tanh", lambda: unary(N.tanh))
    case("relu", lambda: unary(N.relu, data=away_from_zero((3, 4))))
    case("elu", lambda: unary(N.elu, data=away_from_zero((3, 4))))
    case("square", lambda: unary(N.square))
    case("absolute", lambda: unary(N.absolute, data=away_from_zero((3, 4))))
    case("scale", lambda: unary(N.scale, s=-1.7))
    case("add_scalar", lambda: unary(N.add_scalar, s=0.31))
    case(
        "maximum_scalar",
        lambda: unary(N.maximum_scalar, data=away_from_zero((3, 4), 0.3), floor=0.0),
    )
    case("transpose", lambda: unary(lambda t: N.transpose(t, (1, 0))))
    case("reshape", lambda: unary(lambda t: N.reshape(t, (2, 6))))

    def slice_case():
        x = N.parameter(rng.normal(0.0, 1.0, (4, 6)))
        proj = rng.normal(0.0, 1.0, (4, 3))

        def fn():
            return scalarize(N.slice_axis(x, 1, 2, 5), proj)

        return fn, [("x", x)]

    case("slice_axis", slice_case)

    def reduce_case(op, axis, keepdims):
        def build():
            x = N.parameter(rng.normal(0.0, 1.0, (3, 5)))
            probe = op(N.constant(x.values), axis=axis, keepdims=keepdims)
            proj = rng.normal(0.0, 1.0, probe.values.shape)

            def fn():
                return scalarize(op(x, axis=axis, keepdims=keepdims), proj)

            return fn, [("x", x)]

        return build

    case("reduce_sum_all", reduce_case(N.reduce_sum, None, False))
    case("reduce_sum_axis", reduce_case(N.reduce_sum, 1, True))
    case("reduce_mean_all", reduce_case(N.reduce_mean, None, False))
    case("reduce_mean_axis", reduce_case(N.reduce_mean, 0, False))
    case("softmax", lambda: unary(N.softmax))

    def binary(op, sa=(3, 4), sb=(3, 4), db=None):
        a = N.parameter(rng.normal(0.0, 1.0, sa))
        b = N.parameter(rng.normal(0.0, 1.0, sb) if db is None else db)
        out_shape = np.broadcast_shapes(sa, sb)
        proj = rng.normal(0.0, 1.0, out_shape)

        def fn():
            return scalarize(op(a, b), proj)

        return fn, [("a", a), ("b", b)]

    case("add", lambda: binary(N.add))
    case("add_broadcast", lambda: binary(N.add, sb=(4,)))
    case("sub", lambda: binary(N.sub))
    case("mul", lambda: binary(N.mul))
    case("mul_broadcast", lambda: binary(N.mul, sa=(2, 3, 4), sb=(1, 3, 4)))
    case("div", lambda: binary(N.div, db=away_from_zero((3, 4), 0.5)))

    def matmul_case(sa, sb):
        a = N.parameter(rng.normal(0.0, 1.0, sa))
        b = N.parameter(rng.normal(0.0, 1.0, sb))
        proj = rng.normal(0.0, 1.0, np.matmul(a.values, b.values).shape)

        def fn():
            return scalarize(N.matmul(a, b), proj)

        return fn, [("a", a), ("b", b)]

    case("matmul_2d", lambda: matmul_case((3, 4), (4, 2)))
    case("matmul_batched", lambda: matmul_case((2, 3, 4), (2, 4, 2)))
    case("matmul_broadcast", lambda: matmul_case((2, 3, 4), (4, 5)))

    def concat_case():
        a = N.parameter(rng.normal(0.0, 1.0, (3, 2)))
        b = N.parameter(rng.normal(0.0, 1.0, (3, 5)))
        proj = rng.normal(0.0, 1.0, (3, 7))

        def fn():
            return scalarize(N.concat([a, b], axis=1), proj)

        return fn, [("a", a), ("b", b)]

    case("concat", concat_case)

    def embedding_case():
        table = N.parameter(rng.normal(0.0, 1.0, (6, 3)))
        idx = np.array([0, 2, 2, 5, 1])  # duplicate rows must accumulate
        proj = rng.normal(0.0, 1.0, (5, 3))

        def fn():
            return scalarize(N.embedding(table, idx), proj)

        return fn, [("table", table)]

    case("embedding", embedding_case)

    def layer_norm_case():
        x = N.parameter(rng.normal(0.0, 1.0, (4, 6)))
        gain = N.parameter(1.0 + 0.1 * rng.normal(0.0, 1.0, 6))
        bias = N.parameter(0.1 * rng.normal(0.0, 1.0, 6))
        proj = rng.normal(0.0, 1.0, (4, 6))

        def fn():
            return scalarize(N.layer_norm(x, gain, bias), proj)

        return fn, [("x", x), ("gain", gain), ("bias", bias)]

    case("layer_norm", layer_norm_case)

    def cross_entropy_case():
        logits = N.parameter(rng.normal(0.0, 1.0, (4, 7)))
        targets = rng.integers(0, 7, size=4)

        def fn():
            return N.reduce_mean(N.cross_entropy(logits, targets))

        return fn, [("logits", logits)]

    case("cross_entropy", cross_entropy_case)

    def dropout_case():
        x = N.parameter(rng.normal(0.0, 1.0, (4, 5)))
        proj = rng.normal(0.0, 1.0, (4, 5))

        def fn():
            # Fresh generator with a fixed seed: the mask is identical on
            # every call, which FD requires.
            return scalarize(N.dropout(x, 0.4, np.random.default_rng(7)), proj)

        return fn, [("x", x)]

    case("dropout", dropout_case)

    def attention_case(causal):
        q = N.parameter(rng.normal(0.0, 1.0, (2, 5, 4)))
        k = N.parameter(rng.normal(0.0, 1.0, (2, 5, 4)))
        v = N.parameter(rng.normal(0.0, 1.0, (2, 5, 4)))
        proj = rng.normal(0.0, 1.0, (2, 5, 4))

        def fn():
            return scalarize(linear_attention(q, k, v, causal=causal), proj)

        return fn, [("q", q), ("k", k), ("v", v)]

    case("linear_attention_causal", lambda: attention_case(True))
    case("linear_attention_full", lambda: attention_case(False))

    return cases
