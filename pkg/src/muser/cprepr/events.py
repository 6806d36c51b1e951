"""Event-stream JSON: the on-disk interchange format for token sequences.

Schema (version 1):

    {
      "version": 1,
      "vocab_preset": "paper" | "desk",
      "emotion": "none" | "Q1" | "Q2" | "Q3" | "Q4",
      "tokens": [[f, b, t, c, p, d, v, o], ...]
    }

Unknown top-level keys are rejected so silently misspelled fields cannot
pass as defaults.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DataError
from .types import EMOTION_NAMES, CpSequence, TYPES, emotion_index
from .vocab import vocabulary

SCHEMA_VERSION = 1
_KEYS = {"version", "vocab_preset", "emotion", "tokens"}


def sequence_to_stream(seq: CpSequence) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "vocab_preset": seq.vocab_preset,
        "emotion": EMOTION_NAMES[seq.emotion],
        "tokens": seq.tokens.tolist(),
    }


def stream_to_sequence(payload: dict) -> CpSequence:
    if not isinstance(payload, dict):
        raise DataError("event stream must be a JSON object")
    unknown = set(payload) - _KEYS
    if unknown:
        raise DataError(f"unknown event-stream fields: {sorted(unknown)}")
    missing = _KEYS - set(payload)
    if missing:
        raise DataError(f"missing event-stream fields: {sorted(missing)}")
    if payload["version"] != SCHEMA_VERSION:
        raise DataError(f"unsupported event-stream version {payload['version']!r}")
    vocab = vocabulary(payload["vocab_preset"])
    emotion = emotion_index(payload["emotion"])
    tokens = payload["tokens"]
    if not isinstance(tokens, list) or any(
        not isinstance(row, list) or len(row) != len(TYPES) for row in tokens
    ):
        raise DataError(f"tokens must be rows of {len(TYPES)} integers")
    arr = np.asarray(tokens, dtype=np.int64)
    seq = CpSequence(tokens=arr, vocab_preset=vocab.preset, emotion=emotion)
    seq.validate(vocab)
    return seq


def save_event_stream(seq: CpSequence, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sequence_to_stream(seq)))


def load_event_stream(path: str | Path) -> CpSequence:
    try:
        payload = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise DataError(f"event-stream file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"invalid JSON in {path}: {e}") from e
    return stream_to_sequence(payload)


def save_corpus(seqs: list[CpSequence], path: str | Path) -> None:
    """Write several sequences as {"version", "sequences": [stream, ...]}."""
    payload = {
        "version": SCHEMA_VERSION,
        "sequences": [sequence_to_stream(seq) for seq in seqs],
    }
    Path(path).write_text(json.dumps(payload))


def load_corpus(path: str | Path) -> list[CpSequence]:
    """Read a corpus file; a bare single event stream also loads (as [seq])."""
    try:
        payload = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise DataError(f"corpus file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"invalid JSON in {path}: {e}") from e
    if not isinstance(payload, dict):
        raise DataError("corpus must be a JSON object")
    if "sequences" not in payload:
        return [stream_to_sequence(payload)]
    unknown = set(payload) - {"version", "sequences"}
    if unknown:
        raise DataError(f"unknown corpus fields: {sorted(unknown)}")
    if payload.get("version") != SCHEMA_VERSION:
        raise DataError(f"unsupported corpus version {payload.get('version')!r}")
    if not isinstance(payload["sequences"], list) or not payload["sequences"]:
        raise DataError("corpus needs a non-empty sequence list")
    return [stream_to_sequence(item) for item in payload["sequences"]]
