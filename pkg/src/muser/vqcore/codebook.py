"""Vector quantization codebook with exponential-moving-average updates.

quantize: each input row maps to the codebook entry with the smallest
Euclidean distance (lowest index wins ties). The codebook itself never
receives a gradient; it tracks assigned encoder outputs through EMA
statistics with Laplace smoothing:

    count_k <- gamma * count_k + (1-gamma) * n_k
    sum_k   <- gamma * sum_k   + (1-gamma) * sum of rows assigned to k
    smoothed_k = (count_k + eps) / (total + K*eps) * total
    e_k = sum_k / smoothed_k

Statistics start from one pseudo-observation per entry (count 1, sum equal
to the entry itself), so an entry that never gets assigned keeps its count
and sum decaying at the same rate and stays where it is; with a zero count
the division above would instead inflate unassigned entries by 1/eps and
freeze the quantizer on whichever entry won the first batch.

Entries that receive no assignments for a long stretch are reseeded from
recent encoder outputs so the codebook cannot silently die.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericFault, ShapeError

EMA_GAMMA = 0.99
LAPLACE_EPS = 1e-5
DEAD_CODE_STEPS = 2000


def nearest_code(z: np.ndarray, codebook: np.ndarray) -> np.ndarray:
    """Index of the closest codebook row for each input row, ties to lowest.

    Distances are computed directly as sum((z - e)^2) in row chunks, the
    same reduction a brute-force oracle performs, so ties and rounding
    behave identically.
    """
    if z.ndim != 2 or codebook.ndim != 2 or z.shape[1] != codebook.shape[1]:
        raise ShapeError(
            f"cannot quantize {z.shape} against codebook {codebook.shape}"
        )
    n = z.shape[0]
    codes = np.empty(n, dtype=np.int64)
    chunk = max(1, 4_000_000 // max(codebook.size, 1))
    for start in range(0, n, chunk):
        block = z[start : start + chunk]
        d = block[:, None, :] - codebook[None, :, :]
        dist = (d * d).sum(axis=-1)
        codes[start : start + chunk] = dist.argmin(axis=1)
    return codes


class Codebook:
    """K x L quantizer state: entries plus EMA statistics."""

    def __init__(self, k: int, dim: int, rng: np.random.Generator,
                 dtype=np.float64):
        self.k = k
        self.dim = dim
        self.entries = rng.normal(0.0, 1.0, (k, dim)).astype(dtype)
        self.ema_count = np.ones(k, dtype=dtype)
        self.ema_sum = self.entries.copy()
        self.steps_unused = np.zeros(k, dtype=np.int64)

    def quantize(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (codes, quantized rows) for a (N, L) array."""
        codes = nearest_code(z, self.entries)
        return codes, self.entries[codes]

    def is_virgin(self) -> bool:
        """True while no ema_update has folded in a batch yet.

        Training uses this to decide whether the entries still need seating
        on real encoder outputs (init_from); any update breaks the count
        pattern, so a resumed checkpoint never gets re-seated.
        """
        return bool(
            np.all(self.ema_count == 1.0)
            and np.array_equal(self.ema_sum, self.entries)
            and np.all(self.steps_unused == 0)
        )

    def init_from(self, z: np.ndarray, rng: np.random.Generator) -> None:
        """Re-seat every entry on actual encoder outputs.

        A codebook drawn blind has no reason to overlap the encoder's output
        cloud; when it misses, a single nearest entry swallows every
        assignment and quantization starts out degenerate. Sampling the
        initial entries from data rows puts all of them inside the cloud.
        Rows are drawn without replacement when z has at least k rows;
        otherwise entries reuse rows with small jitter to stay distinct.
        """
        if z.ndim != 2 or z.shape[1] != self.dim:
            raise ShapeError(f"cannot seed {self.entries.shape} codebook "
                             f"from rows of shape {z.shape}")
        n = z.shape[0]
        if n >= self.k:
            picks = rng.choice(n, size=self.k, replace=False)
            entries = z[picks]
        else:
            picks = rng.integers(0, n, size=self.k)
            jitter = 0.01 * max(z.std(), 1e-3)
            entries = z[picks] + jitter * rng.normal(size=(self.k, self.dim))
        self.entries = entries.astype(self.entries.dtype)
        self.ema_sum = self.entries.copy()
        self.ema_count = np.ones(self.k, dtype=self.ema_count.dtype)
        self.steps_unused = np.zeros(self.k, dtype=np.int64)

    def ema_update(self, z: np.ndarray, codes: np.ndarray,
                   gamma: float = EMA_GAMMA, eps: float = LAPLACE_EPS,
                   rng: np.random.Generator | None = None,
                   reseed_after: int | None = DEAD_CODE_STEPS) -> None:
        """Fold one batch of assignments into the EMA statistics.

        ``rng`` enables dead-code reseeding: entries unused for
        ``reseed_after`` consecutive updates are re-drawn from this batch's
        encoder outputs. Pass ``reseed_after=None`` to disable (the oracle
        tests do, so the update rule stays a pure function of its inputs).
        """
        if z.shape[0] != codes.shape[0]:
            raise ShapeError("codes/encoder outputs length mismatch")
        if not np.isfinite(z).all():
            raise NumericFault("non-finite encoder outputs in ema_update")
        one_hot_counts = np.bincount(codes, minlength=self.k).astype(z.dtype)
        sums = np.zeros_like(self.ema_sum)
        np.add.at(sums, codes, z)
        self.ema_count = gamma * self.ema_count + (1.0 - gamma) * one_hot_counts
        self.ema_sum = gamma * self.ema_sum + (1.0 - gamma) * sums
        total = self.ema_count.sum()
        smoothed = (self.ema_count + eps) / (total + self.k * eps) * total
        self.entries = self.ema_sum / smoothed[:, None]

        used = one_hot_counts > 0
        self.steps_unused[used] = 0
        self.steps_unused[~used] += 1
        if reseed_after is not None and rng is not None:
            dead = self.steps_unused >= reseed_after
            n_dead = int(dead.sum())
            if n_dead:
                picks = rng.integers(0, z.shape[0], size=n_dead)
                self.entries[dead] = z[picks]
                self.ema_sum[dead] = z[picks]
                self.ema_count[dead] = 1.0
                self.steps_unused[dead] = 0

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {
            "entries": self.entries,
            "ema_count": self.ema_count,
            "ema_sum": self.ema_sum,
            "steps_unused": self.steps_unused,
        }

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        self.entries = arrays["entries"].copy()
        self.ema_count = arrays["ema_count"].copy()
        self.ema_sum = arrays["ema_sum"].copy()
        self.steps_unused = arrays["steps_unused"].astype(np.int64).copy()
        self.k, self.dim = self.entries.shape
