"""Compound-word representation: vocabularies, MIDI I/O, tokenization."""

from .types import (
    ACTIVE_FIELDS,
    BAR_BEAT,
    CHORD,
    CpSequence,
    CpToken,
    DURATION,
    ELEMENTS,
    EMOTION,
    EMOTION_NAMES,
    FAMILY,
    FAM_EMOTION,
    FAM_EOS,
    FAM_METRIC,
    FAM_NOTE,
    NoteEvent,
    PITCH,
    REQUIRED_FIELDS,
    Score,
    TEMPO,
    TYPES,
    TokenizeStats,
    VELOCITY,
    emotion_index,
    family_name,
)
from .vocab import SUB_BEATS_PER_BAR, Vocabulary, vocabulary
from .midi import parse_midi, write_midi
from .tokenize import detokenize, tokenize
from .events import (
    load_corpus,
    load_event_stream,
    save_corpus,
    save_event_stream,
    sequence_to_stream,
    stream_to_sequence,
)

__all__ = [
    "ACTIVE_FIELDS", "BAR_BEAT", "CHORD", "CpSequence", "CpToken", "DURATION",
    "ELEMENTS", "EMOTION", "EMOTION_NAMES", "FAMILY", "FAM_EMOTION", "FAM_EOS",
    "FAM_METRIC", "FAM_NOTE", "NoteEvent", "PITCH", "REQUIRED_FIELDS", "Score",
    "TEMPO", "TYPES", "TokenizeStats", "VELOCITY", "emotion_index",
    "family_name", "SUB_BEATS_PER_BAR", "Vocabulary", "vocabulary",
    "parse_midi", "write_midi", "detokenize", "tokenize", "load_corpus",
    "load_event_stream",
    "save_corpus",
    "save_event_stream", "sequence_to_stream", "stream_to_sequence",
]
