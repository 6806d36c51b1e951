"""Latent slicing: the complete latent splits into seven element slices.

The latent width is L = 7*l; slice i (width l) belongs to element i in the
fixed order family, bar_beat, tempo, chord, pitch, duration, velocity.
Emotion carries no slice; it conditions the prior instead.
"""

from __future__ import annotations

import numpy as np

from ..cprepr import ELEMENTS
from ..errors import ShapeError
from ..numerics import Tensor
from ..numerics import tensor as T

N_ELEMENTS = len(ELEMENTS)


def slice_width(latent_width: int) -> int:
    if latent_width % N_ELEMENTS != 0:
        raise ShapeError(
            f"latent width {latent_width} is not a multiple of {N_ELEMENTS}"
        )
    return latent_width // N_ELEMENTS


def element_bounds(latent_width: int) -> dict[str, tuple[int, int]]:
    l = slice_width(latent_width)
    return {name: (i * l, (i + 1) * l) for i, name in enumerate(ELEMENTS)}


def slice_latent(z_q: Tensor, l: int | None = None) -> dict[str, Tensor]:
    """Split (batch, N, L) into {element: (batch, N, l)} in element order."""
    latent_width = z_q.shape[-1]
    if l is not None and latent_width != l * N_ELEMENTS:
        raise ShapeError(
            f"latent width {latent_width} does not equal {N_ELEMENTS}*{l}"
        )
    out = {}
    for name, (start, stop) in element_bounds(latent_width).items():
        out[name] = T.slice_axis(z_q, z_q.ndim - 1, start, stop)
    return out


def slice_array(z_q: np.ndarray) -> dict[str, np.ndarray]:
    """Numpy twin of slice_latent for detached latents."""
    out = {}
    for name, (start, stop) in element_bounds(z_q.shape[-1]).items():
        out[name] = z_q[..., start:stop]
    return out
