"""Pooled element latents for clustering analysis and 2-D projection.

Each piece contributes one l-dim vector per element: the mean over its real
(unpadded) time steps of the quantized latent slice for that element. A
principal-component projection to 2-D via covariance eigendecomposition
stands in for heavier embedding methods.
"""

from __future__ import annotations

import numpy as np

from ..cprepr import ELEMENTS
from ..errors import DataError, ShapeError
from ..med import element_bounds


def pooled_latents(model, corpus, batch_size: int = 16) -> dict[str, np.ndarray]:
    """Per element: (n_pieces, l) array of time-averaged quantized latents."""
    if len(corpus) == 0:
        raise DataError("latent pooling needs a non-empty corpus")
    bounds = element_bounds(model.config.latent_width)
    chunks: dict[str, list[np.ndarray]] = {name: [] for name in ELEMENTS}
    for start in range(0, len(corpus), batch_size):
        tokens = corpus.tokens[start:start + batch_size]
        mask = corpus.mask[start:start + batch_size]
        _, z_q = model.encode(tokens)
        weights = mask.astype(z_q.dtype)
        denom = weights.sum(axis=1, keepdims=True)
        for name in ELEMENTS:
            lo, hi = bounds[name]
            pooled = (z_q[:, :, lo:hi] * weights[:, :, None]).sum(axis=1) / denom
            chunks[name].append(pooled)
    return {name: np.concatenate(parts, axis=0) for name, parts in chunks.items()}


def latent_table(pooled: dict[str, np.ndarray], emotions, ids=None):
    """Flatten pooled latents to rows (piece id, emotion, element, vector)."""
    n = len(emotions)
    if ids is None:
        ids = [str(i) for i in range(n)]
    rows = []
    for name in ELEMENTS:
        block = pooled[name]
        if block.shape[0] != n:
            raise ShapeError("pooled latents and emotion labels disagree")
        for i in range(n):
            rows.append((ids[i], int(emotions[i]), name, block[i]))
    return rows


def write_latent_csv(path: str, pooled: dict[str, np.ndarray], emotions, ids=None):
    """CSV with columns piece, emotion, element, z0..z{l-1}."""
    rows = latent_table(pooled, emotions, ids)
    width = rows[0][3].shape[0]
    header = ["piece", "emotion", "element"] + [f"z{i}" for i in range(width)]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for pid, emo, name, vec in rows:
            cells = [pid, str(emo), name] + [repr(float(v)) for v in vec]
            fh.write(",".join(cells) + "\n")


def pca_2d(points) -> np.ndarray:
    """Project points onto their top two principal axes.

    Axes come from an eigendecomposition of the covariance matrix; each axis
    sign is fixed so its largest-magnitude entry is positive.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise ShapeError(f"points must be (n, d) with d >= 2, got {pts.shape}")
    centered = pts - pts.mean(axis=0)
    denom = max(len(pts) - 1, 1)
    cov = centered.T @ centered / denom
    eigvals, eigvecs = np.linalg.eigh(cov)
    axes = eigvecs[:, np.argsort(eigvals)[::-1][:2]]
    for j in range(axes.shape[1]):
        k = np.argmax(np.abs(axes[:, j]))
        if axes[k, j] < 0:
            axes[:, j] = -axes[:, j]
    return centered @ axes
