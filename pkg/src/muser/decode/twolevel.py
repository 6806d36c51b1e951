"""Two-level decoding: a family pass, then element heads refine the fields.

One decoder object covers the three head layouts:

global+element  hidden states from the global decoder feed per-element
                causal decoders that also read the matching latent slice.
global_only     hidden states feed plain linear readouts.
element_only    per-element decoders read latent slices alone.

Generation runs token by token. Stage one samples the family; stage two
samples the fields that family activates, with indices the token grammar
rules out masked away (emotion only at the opening token, notes only once a
beat exists, beats only once a bar exists, required fields never empty). The
final position is always closed with an end token.
"""

from __future__ import annotations

import numpy as np

from ..cprepr import (
    ACTIVE_FIELDS,
    BAR_BEAT,
    ELEMENTS,
    EMOTION,
    FAM_EMOTION,
    FAM_EOS,
    FAM_METRIC,
    FAM_NOTE,
    FAMILY,
    TYPES,
)
from ..errors import ShapeError, UsageError
from ..med import slice_array, slice_latent
from ..numerics import Module, Tensor
from ..numerics import tensor as T
from .decoders import ElementDecoder, GlobalDecoder, LinearHead
from .sampling import SamplingPolicy, sample_token

DECODER_MODES = ("global+element", "global_only", "element_only")

# Fixed layout of the bar_beat field: 0 empty, 1 bar, 2.. sub-beats.
BAR_INDEX = 1
FIRST_BEAT_INDEX = 2


class TwoLevelDecoder(Module):
    def __init__(self, vocab_sizes: dict[str, int], emb_sizes: dict[str, int],
                 g_width: int, g_heads: int, g_ff: int, g_layers: int,
                 e_width: int, e_heads: int, e_ff: int, e_layers: int,
                 n_max: int, l: int, cond_mode: str, mode: str,
                 rng: np.random.Generator, dropout: float = 0.0):
        if mode not in DECODER_MODES:
            raise UsageError(f"unknown decoder mode {mode!r}")
        if mode == "global+element" and e_width != g_width:
            raise ShapeError("element decoders add onto global states; widths must match")
        self.mode = mode
        self.n_max = n_max
        self.l = l
        self.global_dec = None
        if mode != "element_only":
            self.global_dec = GlobalDecoder(
                vocab_sizes, emb_sizes, g_width, g_heads, g_ff, g_layers,
                n_max, 7 * l, cond_mode, rng, dropout,
            )
        if mode == "global_only":
            self.heads = {
                name: LinearHead(g_width, vocab_sizes[name], rng)
                for name in ELEMENTS
            }
        else:
            self.heads = {
                name: ElementDecoder(
                    vocab_sizes[name], e_width, e_heads, e_ff, e_layers,
                    l, n_max, rng,
                    with_family_context=(name != "family"),
                    dropout=dropout,
                )
                for name in ELEMENTS
            }
        self.vocab_sizes = dict(vocab_sizes)

    def teacher_logits(self, tokens: np.ndarray, z_q: Tensor,
                       train_rng: np.random.Generator | None = None,
                       ) -> dict[str, Tensor]:
        """Teacher-forced logits for all seven heads, each (m, N, V_name).

        Element heads other than the family head receive the true family of
        the token they are predicting.
        """
        if tokens.ndim != 3 or tokens.shape[-1] != len(TYPES):
            raise ShapeError(f"expected (m, N, {len(TYPES)}) tokens, got {tokens.shape}")
        h = None
        if self.global_dec is not None:
            h = self.global_dec(tokens, z_q, train_rng)
        if self.mode == "global_only":
            return {name: self.heads[name](h) for name in ELEMENTS}
        slices = slice_latent(z_q, self.l)
        families = tokens[:, :, FAMILY]
        out: dict[str, Tensor] = {}
        for name in ELEMENTS:
            ctx = families if name != "family" else None
            out[name] = self.heads[name](h, slices[name], ctx, train_rng)
        return out

    # Generation.

    def _family_mask(self, seen_beat: bool) -> np.ndarray:
        mask = np.zeros(self.vocab_sizes["family"], dtype=bool)
        mask[FAM_EMOTION] = True
        if not seen_beat:
            mask[FAM_NOTE] = True
        return mask

    def _field_mask(self, name: str, seen_bar: bool) -> np.ndarray | None:
        mask = np.zeros(self.vocab_sizes[name], dtype=bool)
        if name == "bar_beat":
            mask[0] = True
            if not seen_bar:
                mask[FIRST_BEAT_INDEX:] = True
            return mask
        if name in ("pitch", "duration", "velocity"):
            mask[0] = True
            return mask
        return None

    def _hidden(self, prefix: np.ndarray, z_rows: np.ndarray,
                z_full: np.ndarray) -> Tensor | None:
        if self.global_dec is None:
            return None
        z_g = z_full if self.global_dec.cond_mode == "cross_attention" else z_rows
        return self.global_dec(prefix[None], T.constant(z_g[None]))

    def _head_row(self, name: str, h: Tensor | None,
                  z_slices: dict[str, np.ndarray] | None,
                  fam_ctx: np.ndarray, t: int) -> np.ndarray:
        if self.mode == "global_only":
            return self.heads[name](h).values[0, t]
        z_slice = T.constant(z_slices[name][None])
        ctx = fam_ctx[None] if name != "family" else None
        return self.heads[name](h, z_slice, ctx).values[0, t]

    def _sample_row(self, rows: np.ndarray, z_q: np.ndarray, t: int,
                    policies: dict[str, SamplingPolicy],
                    rng: np.random.Generator,
                    seen_bar: bool, seen_beat: bool) -> np.ndarray:
        """Sample token t given decided rows 0..t-1."""
        prefix = np.concatenate(
            [rows, np.zeros((1, len(TYPES)), dtype=np.int64)], axis=0
        )
        z_rows = z_q[: t + 1]
        h = self._hidden(prefix, z_rows, z_q)
        z_slices = slice_array(z_rows) if self.mode != "global_only" else None
        fam_ctx = prefix[:, FAMILY].copy()
        fam_logits = self._head_row("family", h, z_slices, fam_ctx, t)
        family = sample_token(
            fam_logits, policies["family"], rng, self._family_mask(seen_beat)
        )
        row = np.zeros(len(TYPES), dtype=np.int64)
        row[FAMILY] = family
        fam_ctx[t] = family
        for field_index in sorted(ACTIVE_FIELDS[family]):
            if field_index == EMOTION:
                continue
            name = TYPES[field_index]
            logits = self._head_row(name, h, z_slices, fam_ctx, t)
            row[field_index] = sample_token(
                logits, policies[name], rng, self._field_mask(name, seen_bar)
            )
        return row

    def generate(self, z_q: np.ndarray, emotion: int,
                 policies: dict[str, SamplingPolicy],
                 rng: np.random.Generator,
                 max_len: int | None = None) -> tuple[np.ndarray, dict]:
        """Decode a token sequence from quantized latents (n_z, L).

        Returns (tokens, info); info reports whether the end token was
        produced by the model or forced at the length limit.
        """
        if z_q.ndim != 2 or z_q.shape[1] != 7 * self.l:
            raise ShapeError(f"expected latents (n, {7 * self.l}), got {z_q.shape}")
        n_z = z_q.shape[0]
        limit = n_z if max_len is None else min(max_len, n_z)
        limit = min(limit, self.n_max)
        if limit < 2:
            raise UsageError("need room for at least an opening and an end token")
        missing = [name for name in ELEMENTS if name not in policies]
        if missing:
            raise UsageError(f"no sampling policy for {missing}")

        first = np.zeros(len(TYPES), dtype=np.int64)
        first[FAMILY] = FAM_EMOTION
        first[EMOTION] = int(emotion)
        rows = [first]
        seen_bar = False
        seen_beat = False
        forced = False
        ended = False
        for t in range(1, limit):
            if t == limit - 1:
                rows.append(np.zeros(len(TYPES), dtype=np.int64))
                forced = True
                ended = True
                break
            row = self._sample_row(
                np.stack(rows), z_q, t, policies, rng, seen_bar, seen_beat
            )
            rows.append(row)
            if row[FAMILY] == FAM_EOS:
                ended = True
                break
            if row[FAMILY] == FAM_METRIC:
                bb = row[BAR_BEAT]
                if bb == BAR_INDEX:
                    seen_bar = True
                elif bb >= FIRST_BEAT_INDEX:
                    seen_beat = True
        tokens = np.stack(rows).astype(np.int64)
        info = {"ended_by_eos": ended, "forced_eos": forced, "length": len(rows)}
        return tokens, info
