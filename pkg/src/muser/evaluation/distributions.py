"""Per-element token value histograms and histogram comparison helpers."""

from __future__ import annotations

import numpy as np

from ..cprepr import ELEMENTS, FAMILY, TYPES
from ..errors import DataError, ShapeError


def field_histogram(tokens: np.ndarray, field: int, size: int) -> np.ndarray:
    """Counts of token values for one field.

    Index 0 marks "unused" for every field except family, so zeros are
    excluded there; family counts every token.
    """
    values = np.asarray(tokens)[:, field]
    if field != FAMILY:
        values = values[values != 0]
    return np.bincount(values, minlength=size)[:size]


def element_histograms(sequences, vocab) -> dict[str, dict[int, np.ndarray]]:
    """Per element and emotion label: value counts pooled over sequences."""
    out: dict[str, dict[int, np.ndarray]] = {name: {} for name in ELEMENTS}
    for seq in sequences:
        for name in ELEMENTS:
            hist = field_histogram(seq.tokens, TYPES.index(name), vocab.size(name))
            slot = out[name].setdefault(
                seq.emotion, np.zeros(vocab.size(name), dtype=np.int64)
            )
            slot += hist
    return out


def write_histogram_csv(path: str, hists: dict[str, dict[int, np.ndarray]]):
    """CSV with columns element, emotion, index, count."""
    with open(path, "w") as fh:
        fh.write("element,emotion,index,count\n")
        for name in ELEMENTS:
            for emotion in sorted(hists.get(name, {})):
                counts = hists[name][emotion]
                for idx, count in enumerate(counts):
                    fh.write(f"{name},{emotion},{idx},{int(count)}\n")


def emd_1d(p, q) -> float:
    """Earth mover's distance between two 1-D histograms, in bin units.

    Both histograms are normalized to unit mass first.
    """
    a = np.asarray(p, dtype=np.float64)
    b = np.asarray(q, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError("histograms must be 1-D with matching length")
    if a.sum() <= 0 or b.sum() <= 0:
        raise DataError("histogram with zero mass has no distribution")
    return float(np.abs(np.cumsum(a / a.sum() - b / b.sum())).sum())


def sign_agreement(token_diffs: np.ndarray, latent_diffs: np.ndarray):
    """Fraction of nonzero token-difference entries whose sign the latent
    differences reproduce. Returns None when every entry is zero."""
    m = np.asarray(token_diffs)
    r = np.asarray(latent_diffs)
    if m.shape != r.shape:
        raise ShapeError("difference tensors must share a shape")
    nz = m != 0
    if not nz.any():
        return None
    return float((np.sign(m[nz]) == np.sign(r[nz])).mean())
