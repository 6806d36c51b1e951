"""Standard MIDI file reading and writing.

The reader accepts format 0 and 1 files, merges tracks, pairs note-on /
note-off per (channel, pitch) in FIFO order, collects tempo and time
signature meta events, and closes still-open notes at the end of their
track. The writer emits a single format-0 track.

Only what the tokenizer needs is extracted; everything else is skipped
structurally (so the byte stream must still be well formed).
"""

from __future__ import annotations

import struct
from collections import deque

from ..errors import DataError
from .types import NoteEvent, Score

DEFAULT_BPM = 120.0


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def bytes(self, n: int) -> bytes:
        if self.remaining() < n:
            raise DataError("truncated MIDI data")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.bytes(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.bytes(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.bytes(4))[0]

    def vlq(self) -> int:
        """Variable-length quantity, at most 4 bytes."""
        value = 0
        for i in range(4):
            b = self.u8()
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise DataError("variable-length quantity longer than 4 bytes")


def parse_midi(data: bytes) -> Score:
    """Parse MIDI bytes into a Score. Raises DataError on malformed input."""
    r = _Reader(data)
    if r.bytes(4) != b"MThd":
        raise DataError("not a MIDI file (missing MThd)")
    if r.u32() != 6:
        raise DataError("unexpected MThd length")
    fmt = r.u16()
    n_tracks = r.u16()
    division = r.u16()
    if fmt not in (0, 1):
        raise DataError(f"unsupported MIDI format {fmt}")
    if division & 0x8000:
        raise DataError("SMPTE time division is not supported")
    if division == 0:
        raise DataError("zero ticks per beat")

    notes: list[NoteEvent] = []
    tempos: list[tuple[int, float]] = []
    time_sigs: list[tuple[int, float]] = []

    for _ in range(n_tracks):
        if r.bytes(4) != b"MTrk":
            raise DataError("expected MTrk chunk")
        length = r.u32()
        track = _Reader(r.bytes(length))
        _parse_track(track, notes, tempos, time_sigs)

    if not notes:
        raise DataError("MIDI file contains no note events")

    notes.sort(key=lambda n: (n.onset, n.pitch))
    tempos.sort(key=lambda t: t[0])
    if not tempos:
        tempos = [(0, DEFAULT_BPM)]

    beats_per_bar = 4
    if time_sigs:
        time_sigs.sort(key=lambda t: t[0])
        beats_per_bar = max(1, round(time_sigs[0][1]))

    return Score(
        notes=notes,
        tempo_changes=tempos,
        chords=[],
        ticks_per_beat=division,
        beats_per_bar=beats_per_bar,
    )


def _parse_track(r: _Reader, notes, tempos, time_sigs) -> None:
    tick = 0
    status = None
    open_notes: dict[tuple[int, int], deque] = {}

    def close(key, off_tick):
        queue = open_notes.get(key)
        if queue:
            onset, velocity = queue.popleft()
            notes.append(
                NoteEvent(
                    pitch=key[1],
                    onset=onset,
                    duration=max(off_tick - onset, 0),
                    velocity=velocity,
                )
            )
            return True
        return False

    while r.remaining() > 0:
        tick += r.vlq()
        b = r.u8()
        if b == 0xFF:
            meta_type = r.u8()
            length = r.vlq()
            payload = r.bytes(length)
            if meta_type == 0x51:
                if length != 3:
                    raise DataError("bad tempo meta length")
                us_per_beat = int.from_bytes(payload, "big")
                if us_per_beat == 0:
                    raise DataError("zero tempo")
                tempos.append((tick, 60_000_000.0 / us_per_beat))
            elif meta_type == 0x58 and length >= 2:
                nn, dd = payload[0], payload[1]
                time_sigs.append((tick, nn * 4.0 / (1 << dd)))
            elif meta_type == 0x2F:
                break
            continue
        if b in (0xF0, 0xF7):
            r.bytes(r.vlq())
            status = None
            continue
        if b & 0x80:
            status = b
            data1 = r.u8()
        else:
            if status is None:
                raise DataError("data byte with no running status")
            data1 = b
        kind = status & 0xF0
        channel = status & 0x0F
        if kind in (0xC0, 0xD0):
            continue  # one data byte, already consumed
        data2 = r.u8()
        if kind == 0x90 and data2 > 0:
            open_notes.setdefault((channel, data1), deque()).append((tick, data2))
        elif kind == 0x80 or (kind == 0x90 and data2 == 0):
            close((channel, data1), tick)
        # 0xA0/0xB0/0xE0 consume two data bytes and are otherwise ignored.

    for key, queue in open_notes.items():
        while queue:
            close(key, tick)


def _vlq_bytes(value: int) -> bytes:
    if value < 0:
        raise DataError("negative delta time")
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(chunks))


def write_midi(score: Score) -> bytes:
    """Serialize a Score as a single-track format-0 MIDI file."""
    events: list[tuple[int, int, bytes]] = []  # (tick, order, payload)

    nn = max(1, int(round(score.beats_per_bar)))
    events.append((0, 0, bytes([0xFF, 0x58, 0x04, nn, 0x02, 24, 8])))

    tempos = score.tempo_changes or [(0, DEFAULT_BPM)]
    for tick, bpm in tempos:
        if bpm <= 0:
            raise DataError("tempo must be positive")
        us = int(round(60_000_000.0 / bpm))
        events.append((tick, 0, bytes([0xFF, 0x51, 0x03]) + us.to_bytes(3, "big")))

    for note in score.notes:
        if not 0 <= note.pitch <= 127:
            raise DataError(f"pitch {note.pitch} outside MIDI range")
        velocity = min(max(note.velocity, 1), 127)
        on = bytes([0x90, note.pitch, velocity])
        off = bytes([0x80, note.pitch, 0x40])
        events.append((note.onset, 2, on))
        events.append((note.end(), 1, off))

    events.sort(key=lambda e: (e[0], e[1]))

    body = bytearray()
    prev = 0
    for tick, _, payload in events:
        body += _vlq_bytes(tick - prev)
        body += payload
        prev = tick
    body += _vlq_bytes(0) + bytes([0xFF, 0x2F, 0x00])

    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, score.ticks_per_beat)
    return header + b"MTrk" + struct.pack(">I", len(body)) + bytes(body)
