"""Numerics substrate: tensors, tape autodiff, attention blocks, Adam."""

from .tensor import (
    Tape,
    Tensor,
    absolute,
    add,
    add_scalar,
    check_finite,
    concat,
    constant,
    cross_entropy,
    default_dtype,
    div,
    dropout,
    elu,
    embedding,
    get_default_dtype,
    layer_norm,
    matmul,
    maximum_scalar,
    mul,
    parameter,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    scale,
    set_default_dtype,
    slice_axis,
    softmax,
    square,
    stop_gradient,
    straight_through,
    sub,
    tanh,
    transpose,
)
from .nn import (
    Block,
    Embedding,
    FeedForward,
    LayerNorm,
    Linear,
    Module,
    MultiHeadLinearAttention,
    PositionalEmbedding,
    TransformerStack,
    linear_attention,
)
from .optim import AdamState, StepReport
from .gradcases import primitive_cases, scalarize
from .gradcheck import grad_check, grad_check_report

__all__ = [
    "Tape", "Tensor", "absolute", "add", "add_scalar", "check_finite",
    "concat", "constant", "cross_entropy", "default_dtype", "div", "dropout",
    "elu", "embedding", "get_default_dtype", "layer_norm", "matmul",
    "maximum_scalar", "mul", "parameter", "reduce_mean", "reduce_sum", "relu",
    "reshape", "scale", "set_default_dtype", "slice_axis", "softmax",
    "square", "stop_gradient", "straight_through", "sub", "tanh", "transpose",
    "Block", "Embedding", "FeedForward", "LayerNorm", "Linear", "Module",
    "MultiHeadLinearAttention", "PositionalEmbedding", "TransformerStack",
    "linear_attention", "AdamState", "StepReport", "grad_check",
    "primitive_cases",
    "scalarize",
    "grad_check_report",
]
