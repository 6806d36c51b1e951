"""Training configuration: presets, validation, config-file loading.

Two presets ship. "paper" carries the full-scale hyperparameters; "desk"
quarters the hidden sizes, shortens the stacks to layers {2, 2, 1, 2, 2}
and drops the batch to 8 so acceptance runs fit on a laptop CPU.

The reducer network has no independent width: it reads transposed latent
slices whose feature dimension is the padded sequence length, so its width
is always n_max and its feed-forward size 4*n_max.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import yaml

from ..cprepr import TYPES
from ..decode import COND_MODES, DECODER_MODES
from ..errors import DataError

DR_MODES = ("transformer", "mean")
DTYPES = ("float32", "float64")
PRESETS = ("paper", "desk")

PAPER_EMB_SIZES = {
    "family": 32, "bar_beat": 64, "tempo": 128, "chord": 256,
    "pitch": 512, "duration": 128, "velocity": 128, "emotion": 128,
}
DESK_EMB_SIZES = {name: size // 4 for name, size in PAPER_EMB_SIZES.items()}


@dataclass
class TrainConfig:
    preset: str = "desk"
    vocab_preset: str = "desk"
    sampling_preset: str = "desk"
    n_max: int = 256
    k: int = 64
    l: int = 4
    med: bool = True
    dr_mode: str = "transformer"
    cond_mode: str = "cross_attention"
    decoders: str = "global+element"
    alpha: float = 0.1
    beta: float = 0.25
    dropout: float = 0.1
    lr: float = 1e-4
    lr_finetune: float = 1e-5
    batch_size: int = 8
    steps: int = 200
    seed: int = 0
    dtype: str = "float64"
    enc_width: int = 32
    enc_heads: int = 8
    enc_ff: int = 128
    enc_layers: int = 2
    dec_g_width: int = 64
    dec_g_heads: int = 8
    dec_g_ff: int = 256
    dec_g_layers: int = 2
    dec_e_width: int = 64
    dec_e_heads: int = 8
    dec_e_ff: int = 256
    dec_e_layers: int = 1
    dr_heads: int = 4
    dr_layers: int = 2
    prior_width: int = 64
    prior_heads: int = 8
    prior_ff: int = 256
    prior_layers: int = 2
    emb_sizes: dict = field(default_factory=lambda: dict(DESK_EMB_SIZES))

    @property
    def latent_width(self) -> int:
        return 7 * self.l

    @property
    def dr_width(self) -> int:
        return self.n_max

    @property
    def dr_ff(self) -> int:
        return 4 * self.n_max

    def validate(self) -> None:
        def expect(cond, msg):
            if not cond:
                raise DataError(f"config: {msg}")

        expect(self.preset in PRESETS + ("custom",),
               f"preset must be one of {PRESETS + ('custom',)}, got {self.preset!r}")
        expect(self.vocab_preset in PRESETS,
               f"vocab_preset must be one of {PRESETS}, got {self.vocab_preset!r}")
        expect(self.sampling_preset in PRESETS,
               f"sampling_preset must be one of {PRESETS}")
        expect(self.dtype in DTYPES, f"dtype must be one of {DTYPES}")
        expect(self.dr_mode in DR_MODES, f"dr_mode must be one of {DR_MODES}")
        expect(self.cond_mode in COND_MODES,
               f"cond_mode must be one of {COND_MODES}")
        expect(self.decoders in DECODER_MODES,
               f"decoders must be one of {DECODER_MODES}")
        expect(self.med or self.decoders == "global_only",
               "without the latent regularizer only the global decoder applies; "
               "set decoders: global_only")
        for name in ("n_max", "k", "l", "batch_size", "steps", "seed",
                     "enc_width", "enc_heads", "enc_ff", "enc_layers",
                     "dec_g_width", "dec_g_heads", "dec_g_ff", "dec_g_layers",
                     "dec_e_width", "dec_e_heads", "dec_e_ff", "dec_e_layers",
                     "dr_heads", "dr_layers",
                     "prior_width", "prior_heads", "prior_ff", "prior_layers"):
            v = getattr(self, name)
            expect(isinstance(v, int) and not isinstance(v, bool),
                   f"{name} must be an integer")
        expect(self.n_max >= 4, "n_max must be at least 4")
        expect(self.k >= 2, "k must be at least 2")
        expect(self.l >= 1, "l must be at least 1")
        expect(self.batch_size >= 1, "batch_size must be positive")
        expect(self.steps >= 0, "steps must not be negative")
        expect(self.seed >= 0, "seed must not be negative")
        for name in ("alpha", "beta", "lr", "lr_finetune", "dropout"):
            v = getattr(self, name)
            expect(isinstance(v, (int, float)) and not isinstance(v, bool),
                   f"{name} must be a number")
        expect(self.alpha >= 0 and self.beta >= 0,
               "loss weights must not be negative")
        expect(self.lr > 0 and self.lr_finetune > 0,
               "learning rates must be positive")
        expect(0.0 <= self.dropout < 1.0, "dropout must lie in [0, 1)")
        expect(isinstance(self.med, bool), "med must be true or false")
        for mod, width, heads in (
            ("enc", self.enc_width, self.enc_heads),
            ("dec_g", self.dec_g_width, self.dec_g_heads),
            ("dec_e", self.dec_e_width, self.dec_e_heads),
            ("prior", self.prior_width, self.prior_heads),
        ):
            expect(width > 0 and heads > 0 and width % heads == 0,
                   f"{mod}_width {width} must divide by {mod}_heads {heads}")
        if self.med and self.dr_mode == "transformer":
            expect(self.n_max % self.dr_heads == 0,
                   f"n_max {self.n_max} must divide by dr_heads {self.dr_heads} "
                   "(the reducer width is the padded length)")
        if self.decoders == "global+element":
            expect(self.dec_e_width == self.dec_g_width,
                   "dec_e_width must equal dec_g_width when both decoders run")
        expect(isinstance(self.emb_sizes, dict), "emb_sizes must be a mapping")
        expect(set(self.emb_sizes) == set(TYPES),
               f"emb_sizes keys must be exactly {sorted(TYPES)}")
        for name, size in self.emb_sizes.items():
            expect(isinstance(size, int) and size > 0,
                   f"emb_sizes[{name}] must be a positive integer")

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["emb_sizes"] = dict(self.emb_sizes)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        if not isinstance(data, dict):
            raise DataError("config must be a mapping")
        data = dict(data)
        preset = data.pop("preset", "desk")
        base = base_config(preset)
        return apply_overrides(base, data)


def base_config(preset: str) -> TrainConfig:
    if preset == "desk" or preset == "custom":
        cfg = TrainConfig(preset=preset)
    elif preset == "paper":
        cfg = TrainConfig(
            preset="paper",
            vocab_preset="paper",
            sampling_preset="paper",
            n_max=1024,
            k=512,
            l=16,
            batch_size=16,
            dtype="float32",
            enc_width=128, enc_heads=8, enc_ff=512, enc_layers=8,
            dec_g_width=256, dec_g_heads=8, dec_g_ff=1024, dec_g_layers=4,
            dec_e_width=256, dec_e_heads=8, dec_e_ff=1024, dec_e_layers=2,
            dr_heads=4, dr_layers=4,
            prior_width=256, prior_heads=8, prior_ff=1024, prior_layers=8,
            emb_sizes=dict(PAPER_EMB_SIZES),
        )
    else:
        raise DataError(f"unknown preset {preset!r}; expected paper or desk")
    return cfg


def apply_overrides(cfg: TrainConfig, overrides: dict) -> TrainConfig:
    """Apply a field->value mapping on top of a preset; emb_sizes merges."""
    known = {f.name for f in fields(TrainConfig)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise DataError(f"unknown config keys: {', '.join(unknown)}")
    values = dict(overrides)
    if "emb_sizes" in values:
        sizes = values["emb_sizes"]
        if not isinstance(sizes, dict):
            raise DataError("emb_sizes must be a mapping")
        bad = sorted(set(sizes) - set(TYPES))
        if bad:
            raise DataError(f"emb_sizes has unknown types: {', '.join(bad)}")
        merged = dict(cfg.emb_sizes)
        merged.update(sizes)
        values["emb_sizes"] = merged
    out = replace(cfg, **values)
    out.validate()
    return out


def desk_config(**overrides) -> TrainConfig:
    return apply_overrides(base_config("desk"), overrides)


def paper_config(**overrides) -> TrainConfig:
    return apply_overrides(base_config("paper"), overrides)


def load_config(path: str) -> TrainConfig:
    """Read a YAML mapping: optional `preset` key plus field overrides."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise DataError(f"config file is not valid YAML: {exc}")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise DataError("config file must hold a mapping of keys to values")
    return TrainConfig.from_dict(data)
