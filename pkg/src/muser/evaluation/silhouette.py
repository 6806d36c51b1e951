"""Silhouette scoring of labeled point sets under Euclidean distance.

For each point: a = mean distance to its own cluster's other members,
b = smallest mean distance to any other cluster, s = (b - a) / max(a, b).
Points in singleton clusters score 0, as do points where a = b = 0. The
overall score is the mean of s over all points and always lies in [-1, 1].
"""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import DataError, ShapeError


def _distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def silhouette(points, labels) -> float:
    """Mean silhouette value of ``points`` grouped by ``labels``."""
    pts = np.asarray(points, dtype=np.float64)
    lab = np.asarray(labels)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ShapeError(f"points must be (n, d), got {pts.shape}")
    if lab.shape != (pts.shape[0],):
        raise ShapeError("one label per point required")
    groups = np.unique(lab)
    if len(groups) < 2:
        raise DataError("silhouette needs at least two clusters")

    dist = _distances(pts)
    members = {g: lab == g for g in groups}
    scores = np.zeros(len(pts))
    for i in range(len(pts)):
        own = members[lab[i]]
        size = own.sum()
        if size == 1:
            continue  # singleton convention: s = 0
        a = dist[i, own].sum() / (size - 1)
        b = min(dist[i, members[g]].mean() for g in groups if g != lab[i])
        top = max(a, b)
        if top > 0.0:
            scores[i] = (b - a) / top
    return float(scores.mean())


def pair_silhouettes(points, labels) -> dict[tuple[int, int], float]:
    """Silhouette score for every pair of labels, points restricted to the pair.

    Pairs where either label is absent are omitted.
    """
    pts = np.asarray(points, dtype=np.float64)
    lab = np.asarray(labels)
    groups = sorted(int(g) for g in np.unique(lab))
    out = {}
    for ga, gb in itertools.combinations(groups, 2):
        keep = (lab == ga) | (lab == gb)
        out[(ga, gb)] = silhouette(pts[keep], lab[keep])
    return out
