"""Vector-quantized core: encoder, codebook, EMA updates, commitment."""

from .codebook import (
    Codebook,
    DEAD_CODE_STEPS,
    EMA_GAMMA,
    LAPLACE_EPS,
    nearest_code,
)
from .encoder import Encoder, TokenEmbedder, commitment_loss

__all__ = [
    "Codebook", "DEAD_CODE_STEPS", "EMA_GAMMA", "LAPLACE_EPS", "nearest_code",
    "Encoder", "TokenEmbedder", "commitment_loss",
]
