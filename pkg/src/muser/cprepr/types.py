"""Core data types for the compound-word token representation.

A token is a row of 8 integer fields, one per type:

    family, bar_beat, tempo, chord, pitch, duration, velocity, emotion

Four families partition the tokens: EOS (0), emotion (1), metric (2) and
note (3). Types that a family does not use hold index 0, the per-type
"empty" slot (the family field itself has no empty: 0 means EOS).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..errors import DataError

TYPES = (
    "family",
    "bar_beat",
    "tempo",
    "chord",
    "pitch",
    "duration",
    "velocity",
    "emotion",
)

# The seven element types that carry a latent slice (emotion conditions the
# prior instead of being encoded).
ELEMENTS = TYPES[:-1]

FAMILY, BAR_BEAT, TEMPO, CHORD, PITCH, DURATION, VELOCITY, EMOTION = range(8)

FAM_EOS, FAM_EMOTION, FAM_METRIC, FAM_NOTE = range(4)

EMOTION_NAMES = ("none", "Q1", "Q2", "Q3", "Q4")

# Which non-family fields each family may fill. Metric tokens must set
# bar_beat; tempo/chord ride along only on beat tokens. Note tokens must set
# all three of pitch/duration/velocity.
ACTIVE_FIELDS = {
    FAM_EOS: frozenset(),
    FAM_EMOTION: frozenset({EMOTION}),
    FAM_METRIC: frozenset({BAR_BEAT, TEMPO, CHORD}),
    FAM_NOTE: frozenset({PITCH, DURATION, VELOCITY}),
}

REQUIRED_FIELDS = {
    FAM_EOS: frozenset(),
    FAM_EMOTION: frozenset(),
    FAM_METRIC: frozenset({BAR_BEAT}),
    FAM_NOTE: frozenset({PITCH, DURATION, VELOCITY}),
}


class CpToken(NamedTuple):
    family: int
    bar_beat: int = 0
    tempo: int = 0
    chord: int = 0
    pitch: int = 0
    duration: int = 0
    velocity: int = 0
    emotion: int = 0

    def row(self) -> np.ndarray:
        return np.array(self, dtype=np.int64)


@dataclass
class NoteEvent:
    pitch: int
    onset: int          # ticks
    duration: int       # ticks
    velocity: int

    def end(self) -> int:
        return self.onset + self.duration


@dataclass
class Score:
    """A quantization-agnostic piece: notes plus tempo/chord annotations."""

    notes: list[NoteEvent] = field(default_factory=list)
    tempo_changes: list[tuple[int, float]] = field(default_factory=list)
    chords: list[tuple[int, str]] = field(default_factory=list)
    ticks_per_beat: int = 480
    beats_per_bar: int = 4


@dataclass
class TokenizeStats:
    clamped_pitch: int = 0
    clamped_velocity: int = 0
    clamped_duration: int = 0
    clamped_tempo: int = 0
    dropped_notes: int = 0
    truncated: bool = False


@dataclass(eq=False)
class CpSequence:
    """A tokenized piece: (N, 8) int array plus its labels."""

    tokens: np.ndarray
    vocab_preset: str
    emotion: int
    stats: TokenizeStats | None = field(default=None, repr=False)

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.int64)
        if self.tokens.ndim != 2 or self.tokens.shape[1] != len(TYPES):
            raise DataError(
                f"token array must be (N, {len(TYPES)}), got {self.tokens.shape}"
            )

    def __len__(self) -> int:
        return self.tokens.shape[0]

    def validate(self, vocab) -> None:
        """Raise DataError unless the sequence is structurally well formed."""
        toks = self.tokens
        n = len(self)
        if n < 2:
            raise DataError("sequence needs at least the emotion and EOS tokens")
        sizes = [vocab.size(t) for t in TYPES]
        for col, size in enumerate(sizes):
            bad = (toks[:, col] < 0) | (toks[:, col] >= size)
            if bad.any():
                raise DataError(
                    f"{TYPES[col]} index out of range at step {int(np.argmax(bad))}"
                )
        if toks[0, FAMILY] != FAM_EMOTION:
            raise DataError("first token must be the emotion token")
        if toks[0, EMOTION] != self.emotion:
            raise DataError("emotion token does not match the sequence label")
        if toks[-1, FAMILY] != FAM_EOS:
            raise DataError("last token must be EOS")
        if (toks[:-1, FAMILY] == FAM_EOS).any():
            raise DataError("EOS before the end of the sequence")
        if (toks[1:, FAMILY] == FAM_EMOTION).any():
            raise DataError("emotion token after position 0")
        seen_bar = False
        seen_beat = False
        for i in range(n):
            fam = int(toks[i, FAMILY])
            active = ACTIVE_FIELDS[fam]
            required = REQUIRED_FIELDS[fam]
            for col in range(1, len(TYPES)):
                val = int(toks[i, col])
                if col not in active and val != 0:
                    raise DataError(
                        f"step {i}: {TYPES[col]} set on a {family_name(fam)} token"
                    )
                if col in required and val == 0:
                    raise DataError(
                        f"step {i}: {TYPES[col]} empty on a {family_name(fam)} token"
                    )
            if fam == FAM_METRIC:
                if int(toks[i, BAR_BEAT]) == 1:
                    seen_bar = True
                else:
                    if not seen_bar:
                        raise DataError(f"step {i}: beat token before any bar token")
                    seen_beat = True
            if fam == FAM_NOTE and not seen_beat:
                raise DataError(f"step {i}: note token before any beat token")

    def is_well_formed(self, vocab) -> bool:
        try:
            self.validate(vocab)
        except DataError:
            return False
        return True


def family_name(fam: int) -> str:
    return ("EOS", "emotion", "metric", "note")[fam]


def emotion_index(name: str) -> int:
    try:
        return EMOTION_NAMES.index(name)
    except ValueError:
        raise DataError(f"unknown emotion {name!r}; expected one of {EMOTION_NAMES}")
