"""Synthetic corpora with controlled per-element structure.

Two generators:

make_planted_corpus: 64 pieces sharing one rhythmic skeleton while each
    element's indices sit at a per-piece level, every element varying on
    its own dedicated positions. Pairwise sign structure between pieces
    is then known exactly, which is what the regularizer is supposed to
    recover.

make_overfit_corpus: 8 short distinct pieces for memorization runs. The
    velocity levels are bimodal (low half, high half) so element transfer
    between the groups has a measurable signature.
"""

from __future__ import annotations

import numpy as np

from ..cprepr import (
    CpSequence,
    CpToken,
    FAM_EMOTION,
    FAM_EOS,
    FAM_METRIC,
    FAM_NOTE,
    vocabulary,
)

PLANTED_LEN = 18
OVERFIT_LEN = 16


def _piece(emotion: int, bars: list[list[tuple[int, dict, list[dict]]]],
           ) -> np.ndarray:
    """bars: per bar, a list of (beat_index, beat_fields, [note_fields])."""
    rows = [CpToken(family=FAM_EMOTION, emotion=emotion).row()]
    for bar in bars:
        rows.append(CpToken(family=FAM_METRIC, bar_beat=1).row())
        for beat_index, beat_fields, notes in bar:
            rows.append(
                CpToken(family=FAM_METRIC, bar_beat=beat_index,
                        **beat_fields).row()
            )
            for note in notes:
                rows.append(CpToken(family=FAM_NOTE, **note).row())
    rows.append(CpToken(family=FAM_EOS).row())
    return np.stack(rows)


def make_planted_corpus(n_seqs: int = 64, seed: int = 0,
                        ) -> tuple[list[CpSequence], dict]:
    """Pieces on a fixed 18-token skeleton where every element varies on
    its own dedicated positions; returns the per-piece level table.

    Each bar holds one beat whose bar-beat index shifts per piece, one
    beat carrying the piece's tempo, one carrying its chord, and three
    notes varying only pitch, only duration, and only velocity. Keeping
    one varying field per position makes the number of distinct token
    vectors additive across elements (it fits a small codebook), and the
    cross-piece ordering at each position is exactly the ordering of one
    planted level, which is the structure the regularizer must recover.
    """
    rng = np.random.default_rng(seed)
    vocab = vocabulary("desk")

    def spaced(lo: int, hi: int, n: int = 8) -> np.ndarray:
        return np.unique(np.linspace(lo, hi, n).round().astype(int))

    value_sets = {
        "beat_shift": np.arange(8),
        "tempo": spaced(5, vocab.size("tempo") - 5),
        "chord": spaced(1, vocab.size("chord") - 1),
        "pitch": spaced(6, vocab.size("pitch") - 8),
        "duration": np.arange(1, vocab.size("duration")),
        "velocity": np.arange(1, vocab.size("velocity")),
    }
    levels = {
        name: values[rng.integers(0, len(values), n_seqs)]
        for name, values in value_sets.items()
    }
    rest_pitch = int(value_sets["pitch"][len(value_sets["pitch"]) // 2])
    rest_duration = 3
    rest_velocity = 4
    sequences = []
    for s in range(n_seqs):
        emotion = (s % 4) + 1
        bars = []
        for _ in range(2):
            bars.append([
                (2 + int(levels["beat_shift"][s]), {}, []),
                (10, {"tempo": int(levels["tempo"][s])}, [
                    {"pitch": int(levels["pitch"][s]),
                     "duration": rest_duration, "velocity": rest_velocity},
                ]),
                (13, {"chord": int(levels["chord"][s])}, [
                    {"pitch": rest_pitch,
                     "duration": int(levels["duration"][s]),
                     "velocity": rest_velocity},
                ]),
                (16, {}, [
                    {"pitch": rest_pitch, "duration": rest_duration,
                     "velocity": int(levels["velocity"][s])},
                ]),
            ])
        tokens = _piece(emotion, bars)
        seq = CpSequence(tokens=tokens, vocab_preset="desk", emotion=emotion)
        seq.validate(vocab)
        assert len(seq) == PLANTED_LEN
        sequences.append(seq)
    return sequences, levels


def make_overfit_corpus(n_seqs: int = 8, seed: int = 0) -> list[CpSequence]:
    """Short distinct pieces (16 tokens): 2 bars x 2 beats x 2 notes.

    Piece s opens with pitch 6s+1 so prefixes diverge early; velocities are
    drawn low (indices 1..3) for the first half of the corpus and high
    (6..8) for the second half.
    """
    rng = np.random.default_rng(seed)
    vocab = vocabulary("desk")
    sequences = []
    for s in range(n_seqs):
        emotion = (s % 4) + 1
        low = s < n_seqs // 2
        vel = lambda: int(rng.integers(1, 4) if low else rng.integers(6, 9))
        pitches = rng.integers(1, vocab.size("pitch"), 8)
        pitches[0] = 6 * s + 1
        note_i = 0

        def note():
            nonlocal note_i
            fields = {
                "pitch": int(pitches[note_i % 8]),
                "duration": int(rng.integers(1, vocab.size("duration"))),
                "velocity": vel(),
            }
            note_i += 1
            return fields

        bars = []
        for bar in range(2):
            beats = []
            for b in range(2):
                fields = {}
                if bar == 0 and b == 0:
                    fields = {
                        "tempo": int(rng.integers(1, vocab.size("tempo"))),
                        "chord": int(rng.integers(1, vocab.size("chord"))),
                    }
                beats.append((2 + 8 * b, fields, [note(), note()]))
            bars.append(beats)
        tokens = _piece(emotion, bars)
        seq = CpSequence(tokens=tokens, vocab_preset="desk", emotion=emotion)
        seq.validate(vocab)
        assert len(seq) == OVERFIT_LEN
        sequences.append(seq)
    return sequences
