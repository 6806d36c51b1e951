"""Element-wise latent regularization.

For each element, pairwise step-wise differences are compared between the
token space and the reduced latent space:

    M[i, j, t]   = x[i, t] - x[j, t]          (token indices, integers)
    M_R[i, j, t] = z[i, t] - z[j, t]          (reduced latents)

    loss = sum over elements of mean |tanh(M_R) - sgn(M)|

Both matrices are (m, m, N) and antisymmetric in (i, j). The token side
enters through sgn only, so the gradient reaches the latent side alone;
ties (equal token indices) pin the target to exactly 0.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from ..numerics import Tensor
from ..numerics import tensor as T


def element_distance_matrix(x: np.ndarray) -> np.ndarray:
    """(m, N) integer element indices -> (m, m, N) pairwise differences."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"expected (m, N) element indices, got {x.shape}")
    return x[:, None, :] - x[None, :, :]


def latent_distance_matrix(z: Tensor) -> Tensor:
    """(m, N) reduced latents -> (m, m, N) pairwise differences."""
    if z.ndim != 2:
        raise ShapeError(f"expected (m, N) reduced latents, got {z.shape}")
    m, n = z.shape
    a = T.reshape(z, (m, 1, n))
    b = T.reshape(z, (1, m, n))
    return T.sub(a, b)


def regularization_loss(
    token_dists: dict[str, np.ndarray],
    latent_dists: dict[str, Tensor],
) -> Tensor:
    """Sum over elements of mean |tanh(M_R) - sgn(M)|."""
    if set(token_dists) != set(latent_dists):
        raise ShapeError("token/latent element keys differ")
    if not token_dists:
        raise ShapeError("regularization over no elements")
    total: Tensor | None = None
    for name in token_dists:
        target = np.sign(token_dists[name]).astype(float)
        m_r = latent_dists[name]
        if m_r.shape != target.shape:
            raise ShapeError(
                f"{name}: latent matrix {m_r.shape} vs token matrix {target.shape}"
            )
        term = T.reduce_mean(T.absolute(T.sub(T.tanh(m_r), T.constant(target))))
        total = term if total is None else T.add(total, term)
    return total
