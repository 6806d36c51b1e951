"""Objective score metrics at piece and bar level.

Pitch range, number of pitch classes, and polyphony are computed on
``Score`` objects. Polyphony counts sounding notes per sub-beat grid step
(the tokenizer's 16-per-bar grid), averaged over steps where at least one
note sounds. Bar-level variants compute a metric per bar (notes assigned to
bars by onset, empty bars skipped) and average across bars, which can only
narrow pitch-based metrics: B-PR <= PR and B-NPC <= NPC.
"""

from __future__ import annotations

import dataclasses
from collections import Counter, defaultdict

import numpy as np

from ..cprepr import Score
from ..cprepr.vocab import SUB_BEATS_PER_BAR
from ..errors import DataError

METRIC_NAMES = ("PR", "NPC", "POLY", "B-PR", "B-NPC", "B-POLY")


def _require_notes(score: Score) -> None:
    if not score.notes:
        raise DataError("metric needs a score with at least one note")


def _grid_ticks(score: Score) -> float:
    return score.ticks_per_beat * score.beats_per_bar / SUB_BEATS_PER_BAR


def _note_span(note, grid: float) -> tuple[int, int]:
    # A note occupies at least one grid step.
    start = int(round(note.onset / grid))
    steps = max(1, int(round(note.duration / grid)))
    return start, start + steps


def pitch_range(score: Score) -> int:
    """Highest minus lowest sounding pitch, in semitones."""
    _require_notes(score)
    pitches = [note.pitch for note in score.notes]
    return max(pitches) - min(pitches)


def n_pitch_classes(score: Score) -> int:
    """Number of distinct pitch classes (pitch mod 12)."""
    _require_notes(score)
    return len({note.pitch % 12 for note in score.notes})


def polyphony(score: Score) -> float:
    """Average number of concurrently sounding notes.

    The average runs over grid steps where at least one note sounds, so the
    result is always >= 1 for a non-empty score.
    """
    _require_notes(score)
    grid = _grid_ticks(score)
    sounding: Counter[int] = Counter()
    for note in score.notes:
        start, stop = _note_span(note, grid)
        for g in range(start, stop):
            sounding[g] += 1
    return sum(sounding.values()) / len(sounding)


def bar_level(metric, score: Score) -> float:
    """Average of ``metric`` over the bars of ``score``.

    Notes belong to the bar containing their onset; bars without notes are
    skipped.
    """
    _require_notes(score)
    grid = _grid_ticks(score)
    by_bar: dict[int, list] = defaultdict(list)
    for note in score.notes:
        start, _ = _note_span(note, grid)
        by_bar[start // SUB_BEATS_PER_BAR].append(note)
    values = [
        metric(dataclasses.replace(score, notes=notes))
        for _, notes in sorted(by_bar.items())
    ]
    return float(np.mean(values))


def piece_metrics(score: Score) -> dict[str, float]:
    """All six metric values for one piece."""
    return {
        "PR": float(pitch_range(score)),
        "NPC": float(n_pitch_classes(score)),
        "POLY": float(polyphony(score)),
        "B-PR": bar_level(pitch_range, score),
        "B-NPC": bar_level(n_pitch_classes, score),
        "B-POLY": bar_level(polyphony, score),
    }


def metrics_report(scores: list[Score], ids: list[str] | None = None) -> dict:
    """Per-piece metric rows plus mean and standard deviation per metric."""
    if not scores:
        raise DataError("metrics report needs at least one score")
    if ids is None:
        ids = [str(i) for i in range(len(scores))]
    if len(ids) != len(scores):
        raise DataError("one id per score required")
    pieces = []
    for pid, score in zip(ids, scores):
        row = {"piece": pid}
        row.update(piece_metrics(score))
        pieces.append(row)
    summary = {}
    for name in METRIC_NAMES:
        vals = np.array([row[name] for row in pieces])
        summary[name] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return {"pieces": pieces, "summary": summary}
