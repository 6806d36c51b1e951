"""Vocabulary presets: per-type index spaces and value binning.

Index 0 of every type except family is the "empty" slot. The value tables
below are this package's own binning; the per-type sizes are the contract.

paper preset sizes: family 4, bar_beat 18, tempo 56, chord 135, pitch 87,
duration 18, velocity 42, emotion 5.
desk preset shrinks the pitch/duration/velocity value tables and keeps the
structural types identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DataError
from .types import TYPES

SUB_BEATS_PER_BAR = 16

_ROOTS = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")
_QUALITIES = (
    "maj", "min", "dim", "aug", "dom7", "maj7", "min7",
    "dim7", "hdim7", "sus2", "sus4",
)
CHORD_SYMBOLS = tuple(f"{r}_{q}" for r in _ROOTS for q in _QUALITIES) + ("N_N", "CONTI")


@dataclass(frozen=True)
class Vocabulary:
    preset: str
    tempo_values: tuple[float, ...]
    pitch_low: int
    pitch_high: int
    duration_values: tuple[int, ...]      # in grid units (sub-beats)
    velocity_values: tuple[int, ...]
    chord_symbols: tuple[str, ...] = CHORD_SYMBOLS

    def size(self, type_name: str) -> int:
        if type_name == "family":
            return 4
        if type_name == "bar_beat":
            return 2 + SUB_BEATS_PER_BAR
        if type_name == "tempo":
            return 1 + len(self.tempo_values)
        if type_name == "chord":
            return 1 + len(self.chord_symbols)
        if type_name == "pitch":
            return 1 + (self.pitch_high - self.pitch_low + 1)
        if type_name == "duration":
            return 1 + len(self.duration_values)
        if type_name == "velocity":
            return 1 + len(self.velocity_values)
        if type_name == "emotion":
            return 5
        raise DataError(f"unknown type {type_name!r}")

    @property
    def sizes(self) -> dict[str, int]:
        return {t: self.size(t) for t in TYPES}

    # -- bar/beat ---------------------------------------------------------
    # index 1 = bar marker, index 2+s = sub-beat s (s in 0..15).

    @staticmethod
    def bar_index() -> int:
        return 1

    @staticmethod
    def encode_beat(sub_beat: int) -> int:
        if not 0 <= sub_beat < SUB_BEATS_PER_BAR:
            raise DataError(f"sub-beat {sub_beat} outside 0..{SUB_BEATS_PER_BAR - 1}")
        return 2 + sub_beat

    @staticmethod
    def decode_beat(index: int) -> int:
        if index < 2:
            raise DataError(f"bar_beat index {index} is not a beat position")
        return index - 2

    # -- scalar bins -------------------------------------------------------

    def _nearest(self, values: tuple, x: float) -> tuple[int, bool]:
        arr = np.asarray(values, dtype=float)
        idx = int(np.argmin(np.abs(arr - x)))
        clamped = x < arr[0] or x > arr[-1]
        return 1 + idx, clamped

    def encode_tempo(self, bpm: float) -> tuple[int, bool]:
        return self._nearest(self.tempo_values, bpm)

    def decode_tempo(self, index: int) -> float:
        return float(self.tempo_values[index - 1])

    def encode_pitch(self, pitch: int) -> tuple[int, bool]:
        clamped = pitch < self.pitch_low or pitch > self.pitch_high
        p = min(max(pitch, self.pitch_low), self.pitch_high)
        return 1 + (p - self.pitch_low), clamped

    def decode_pitch(self, index: int) -> int:
        return self.pitch_low + (index - 1)

    def encode_duration(self, grid_units: float) -> tuple[int, bool]:
        return self._nearest(self.duration_values, max(grid_units, 1.0))

    def decode_duration(self, index: int) -> int:
        return int(self.duration_values[index - 1])

    def encode_velocity(self, velocity: int) -> tuple[int, bool]:
        return self._nearest(self.velocity_values, velocity)

    def decode_velocity(self, index: int) -> int:
        return int(self.velocity_values[index - 1])

    def encode_chord(self, symbol: str) -> int:
        try:
            return 1 + self.chord_symbols.index(symbol)
        except ValueError:
            raise DataError(f"unknown chord symbol {symbol!r}")

    def decode_chord(self, index: int) -> str:
        return self.chord_symbols[index - 1]


@lru_cache(maxsize=None)
def vocabulary(preset: str) -> Vocabulary:
    if preset == "paper":
        return Vocabulary(
            preset="paper",
            tempo_values=tuple(float(b) for b in range(32, 252, 4)),   # 55 bins
            pitch_low=22,
            pitch_high=107,                                            # 86 pitches
            duration_values=(1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 20, 24, 32),
            velocity_values=tuple(range(3, 126, 3)),                   # 41 bins
        )
    if preset == "desk":
        return Vocabulary(
            preset="desk",
            tempo_values=tuple(float(b) for b in range(32, 252, 4)),
            pitch_low=36,
            pitch_high=83,                                             # 48 pitches
            duration_values=(1, 2, 3, 4, 6, 8, 12, 16),
            velocity_values=(8, 24, 40, 56, 72, 88, 104, 120),
        )
    raise DataError(f"unknown vocab preset {preset!r}")
