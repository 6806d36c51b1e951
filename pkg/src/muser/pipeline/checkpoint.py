"""Single-file checkpoints: magic bytes, version, JSON metadata, named
little-endian arrays."""

from __future__ import annotations

import json
import struct

import numpy as np

from .. import __version__
from ..errors import DataError
from .config import TrainConfig
from .model import MusErModel
from .prior import PriorModel

MAGIC = b"MUSR"
FORMAT_VERSION = 1

_DTYPE_CODES = {"<f8": 0, "<f4": 1, "<i8": 2}
_CODE_DTYPES = {code: dt for dt, code in _DTYPE_CODES.items()}


def _normalize(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    dt = arr.dtype.newbyteorder("<")
    if dt.str not in _DTYPE_CODES:
        raise DataError(f"cannot store arrays of dtype {arr.dtype}")
    return np.ascontiguousarray(arr.astype(dt, copy=False))


def save_checkpoint(path: str, kind: str, config: TrainConfig,
                    arrays: dict[str, np.ndarray],
                    extra: dict | None = None) -> None:
    meta = {
        "kind": kind,
        "config": config.to_dict(),
        "library_version": __version__,
        "extra": extra or {},
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            arr = _normalize(arrays[name])
            name_bytes = name.encode("utf-8")
            if len(name_bytes) > 0xFFFF:
                raise DataError(f"array name too long: {name[:40]}...")
            fh.write(struct.pack("<H", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack("<BB", _DTYPE_CODES[arr.dtype.str], arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


class _Reader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DataError(f"truncated checkpoint: {self.path}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        raise DataError(f"checkpoint not found: {path}")
    r = _Reader(data, path)
    if r.take(4) != MAGIC:
        raise DataError(f"not a checkpoint file: {path}")
    version, meta_len = r.unpack("<II")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise DataError(f"corrupt checkpoint metadata: {path}")
    for key in ("kind", "config", "extra"):
        if key not in meta:
            raise DataError(f"checkpoint metadata lacks {key!r}")
    (n_arrays,) = r.unpack("<I")
    arrays: dict[str, np.ndarray] = {}
    for _ in range(n_arrays):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        code, ndim = r.unpack("<BB")
        if code not in _CODE_DTYPES:
            raise DataError(f"unknown array dtype code {code}")
        shape = r.unpack(f"<{ndim}I")
        dtype = np.dtype(_CODE_DTYPES[code])
        n_bytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        arrays[name] = np.frombuffer(
            r.take(n_bytes), dtype=dtype
        ).reshape(shape).copy()
    if r.pos != len(data):
        raise DataError(f"trailing bytes after checkpoint payload: {path}")
    return {
        "kind": meta["kind"],
        "config": TrainConfig.from_dict(meta["config"]),
        "arrays": arrays,
        "extra": meta["extra"],
    }


def _param_arrays(module) -> dict[str, np.ndarray]:
    return {f"param.{name}": t.values for name, t in module.named_params()}


def _load_params(module, arrays: dict[str, np.ndarray], used: set) -> None:
    for name, t in module.named_params():
        key = f"param.{name}"
        if key not in arrays:
            raise DataError(f"checkpoint lacks parameter {name}")
        arr = arrays[key]
        if arr.shape != t.values.shape:
            raise DataError(
                f"parameter {name}: stored {arr.shape}, model {t.values.shape}"
            )
        t.values = arr.astype(t.values.dtype, copy=True)
        used.add(key)


def rng_state(rng: np.random.Generator) -> dict:
    state = rng.bit_generator.state
    return json.loads(json.dumps(state))


def restore_rng(state: dict) -> np.random.Generator:
    rng = np.random.default_rng()
    rng.bit_generator.state = state
    return rng


def save_model(model: MusErModel, path: str,
               rng: np.random.Generator | None = None,
               extra: dict | None = None) -> None:
    arrays = _param_arrays(model)
    for name, arr in model.codebook.state_arrays().items():
        arrays[f"codebook.{name}"] = arr
    extra = dict(extra or {})
    if rng is not None:
        extra["rng_state"] = rng_state(rng)
    save_checkpoint(path, "muser", model.config, arrays, extra)


def load_model(path: str) -> tuple[MusErModel, dict]:
    payload = load_checkpoint(path)
    if payload["kind"] != "muser":
        raise DataError(f"expected a model checkpoint, got kind {payload['kind']!r}")
    model = MusErModel(payload["config"])
    arrays = payload["arrays"]
    used: set[str] = set()
    _load_params(model, arrays, used)
    cb_state = {}
    for name in model.codebook.state_arrays():
        key = f"codebook.{name}"
        if key not in arrays:
            raise DataError(f"checkpoint lacks codebook state {name}")
        cb_state[name] = arrays[key]
        used.add(key)
    model.codebook.load_state(cb_state)
    stray = sorted(set(arrays) - used)
    if stray:
        raise DataError(f"checkpoint holds unknown arrays: {', '.join(stray[:5])}")
    return model, payload["extra"]


def save_prior(prior: PriorModel, path: str,
               rng: np.random.Generator | None = None,
               extra: dict | None = None) -> None:
    extra = dict(extra or {})
    if rng is not None:
        extra["rng_state"] = rng_state(rng)
    save_checkpoint(path, "prior", prior.config, _param_arrays(prior), extra)


def load_prior(path: str) -> tuple[PriorModel, dict]:
    payload = load_checkpoint(path)
    if payload["kind"] != "prior":
        raise DataError(f"expected a prior checkpoint, got kind {payload['kind']!r}")
    prior = PriorModel(payload["config"])
    used: set[str] = set()
    _load_params(prior, payload["arrays"], used)
    stray = sorted(set(payload["arrays"]) - used)
    if stray:
        raise DataError(f"checkpoint holds unknown arrays: {', '.join(stray[:5])}")
    return prior, payload["extra"]
