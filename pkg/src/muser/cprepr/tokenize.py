"""Score <-> compound-word token conversion.

Emission grammar (the single source of truth for sequence structure):

    [emotion]  then per bar:  [bar]  then per occupied sub-beat:
        [beat (+tempo change? +chord change?)]  [note]*   then  [EOS]

The time grid is 16 sub-beats per bar. A beat token is emitted only for
sub-beats that carry notes, a pending tempo change, or a pending chord
change; the first beat token of a piece always states the effective tempo.
Bar tokens are emitted for every bar from 0 through the last occupied one so
silent bars survive the round trip. An empty score is [emotion][EOS].
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from ..errors import DataError
from .types import (
    BAR_BEAT,
    CHORD,
    CpSequence,
    CpToken,
    DURATION,
    FAMILY,
    FAM_EMOTION,
    FAM_EOS,
    FAM_METRIC,
    FAM_NOTE,
    NoteEvent,
    PITCH,
    Score,
    TEMPO,
    TokenizeStats,
    VELOCITY,
)
from .vocab import SUB_BEATS_PER_BAR, Vocabulary

DEFAULT_BPM = 120.0


def _grid_ticks(score: Score) -> float:
    return score.ticks_per_beat * score.beats_per_bar / SUB_BEATS_PER_BAR


def tokenize(
    score: Score,
    emotion: int,
    vocab: Vocabulary,
    n_max: int | None = None,
) -> CpSequence:
    """Quantize a score onto the sub-beat grid and emit compound-word tokens.

    Values outside the vocabulary's bins are clamped (counted in stats). If
    the result would exceed ``n_max`` tokens it is truncated at a bar
    boundary (flagged in stats).
    """
    stats = TokenizeStats()
    grid = _grid_ticks(score)

    notes_at: dict[int, list] = defaultdict(list)
    for note in score.notes:
        g = int(round(note.onset / grid))
        pitch_idx, clamped = vocab.encode_pitch(note.pitch)
        stats.clamped_pitch += clamped
        dur_idx, clamped = vocab.encode_duration(note.duration / grid)
        stats.clamped_duration += clamped
        vel_idx, clamped = vocab.encode_velocity(note.velocity)
        stats.clamped_velocity += clamped
        notes_at[g].append((pitch_idx, dur_idx, vel_idx))

    tempo_at: dict[int, float] = {}
    for tick, bpm in sorted(score.tempo_changes or [(0, DEFAULT_BPM)]):
        tempo_at[int(round(tick / grid))] = bpm

    chord_at: dict[int, str] = {}
    for tick, symbol in sorted(score.chords):
        chord_at[int(round(tick / grid))] = symbol

    occupied = sorted(set(notes_at) | set(chord_at))
    if occupied:
        n_bars = occupied[-1] // SUB_BEATS_PER_BAR + 1
    else:
        n_bars = 0

    rows: list[np.ndarray] = [
        CpToken(family=FAM_EMOTION, emotion=emotion).row()
    ]
    pending_tempo: float | None = None
    emitted_tempo: float | None = None
    pending_chord: str | None = None
    emitted_chord: str | None = None
    next_grid = 0

    for bar in range(n_bars):
        rows.append(CpToken(family=FAM_METRIC, bar_beat=Vocabulary.bar_index()).row())
        for sub in range(SUB_BEATS_PER_BAR):
            g = bar * SUB_BEATS_PER_BAR + sub
            while next_grid <= g:
                if next_grid in tempo_at:
                    pending_tempo = tempo_at[next_grid]
                if next_grid in chord_at:
                    pending_chord = chord_at[next_grid]
                next_grid += 1
            tempo_idx = 0
            if pending_tempo is not None and pending_tempo != emitted_tempo:
                tempo_idx, clamped = vocab.encode_tempo(pending_tempo)
                stats.clamped_tempo += clamped
            chord_idx = 0
            if pending_chord is not None and pending_chord != emitted_chord:
                chord_idx = vocab.encode_chord(pending_chord)
            has_notes = g in notes_at
            if not (has_notes or tempo_idx or chord_idx):
                continue
            rows.append(
                CpToken(
                    family=FAM_METRIC,
                    bar_beat=Vocabulary.encode_beat(sub),
                    tempo=tempo_idx,
                    chord=chord_idx,
                ).row()
            )
            if tempo_idx:
                emitted_tempo = pending_tempo
            if chord_idx:
                emitted_chord = pending_chord
            for pitch_idx, dur_idx, vel_idx in sorted(notes_at.get(g, ())):
                rows.append(
                    CpToken(
                        family=FAM_NOTE,
                        pitch=pitch_idx,
                        duration=dur_idx,
                        velocity=vel_idx,
                    ).row()
                )

    rows.append(CpToken(family=FAM_EOS).row())
    tokens = np.stack(rows)

    if n_max is not None and len(tokens) > n_max:
        tokens = _truncate_at_bar(tokens, n_max)
        stats.truncated = True

    return CpSequence(
        tokens=tokens, vocab_preset=vocab.preset, emotion=emotion, stats=stats
    )


def _truncate_at_bar(tokens: np.ndarray, n_max: int) -> np.ndarray:
    """Keep whole bars so the prefix plus EOS fits in n_max tokens."""
    if n_max < 2:
        raise DataError(f"n_max={n_max} cannot hold emotion + EOS")
    bar_positions = [
        i
        for i in range(len(tokens))
        if tokens[i, FAMILY] == FAM_METRIC and tokens[i, BAR_BEAT] == Vocabulary.bar_index()
    ]
    keep = 1  # the emotion token
    for pos in bar_positions:
        # Everything up to (excluding) the NEXT bar token after pos.
        nxt = next((p for p in bar_positions if p > pos), len(tokens) - 1)
        if nxt + 1 <= n_max:
            keep = nxt
        else:
            break
    eos = CpToken(family=FAM_EOS).row()[None]
    return np.concatenate([tokens[:keep], eos], axis=0)


def detokenize(seq: CpSequence, vocab: Vocabulary, ticks_per_beat: int = 480,
               beats_per_bar: int = 4) -> Score:
    """Reconstruct a Score from tokens; inverse of tokenize up to binning."""
    grid = ticks_per_beat * beats_per_bar / SUB_BEATS_PER_BAR
    notes: list[NoteEvent] = []
    tempos: list[tuple[int, float]] = []
    chords: list[tuple[int, str]] = []
    dropped = 0
    bar = -1
    onset: int | None = None

    for i, row in enumerate(seq.tokens):
        fam = int(row[FAMILY])
        if fam == FAM_METRIC:
            if row[BAR_BEAT] == Vocabulary.bar_index():
                bar += 1
                continue
            if bar < 0:
                raise DataError(f"step {i}: beat token before any bar token")
            sub = Vocabulary.decode_beat(int(row[BAR_BEAT]))
            onset = int(round((bar * SUB_BEATS_PER_BAR + sub) * grid))
            if row[TEMPO]:
                tempos.append((onset, vocab.decode_tempo(int(row[TEMPO]))))
            if row[CHORD]:
                chords.append((onset, vocab.decode_chord(int(row[CHORD]))))
        elif fam == FAM_NOTE:
            if onset is None:
                raise DataError(f"step {i}: note token before any beat token")
            if row[PITCH] == 0 or row[DURATION] == 0:
                dropped += 1
                continue
            velocity = (
                vocab.decode_velocity(int(row[VELOCITY])) if row[VELOCITY] else 64
            )
            notes.append(
                NoteEvent(
                    pitch=vocab.decode_pitch(int(row[PITCH])),
                    onset=onset,
                    duration=int(round(vocab.decode_duration(int(row[DURATION])) * grid)),
                    velocity=velocity,
                )
            )

    if not tempos:
        tempos = [(0, DEFAULT_BPM)]
    score = Score(
        notes=notes,
        tempo_changes=tempos,
        chords=chords,
        ticks_per_beat=ticks_per_beat,
        beats_per_bar=beats_per_bar,
    )
    if dropped and seq.stats is not None:
        seq.stats.dropped_notes += dropped
    return score
