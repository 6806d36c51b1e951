"""The assembled model: encoder, codebook, slice reducer, two-level decoder."""

from __future__ import annotations

import numpy as np

from ..cprepr import ELEMENTS, TYPES, vocabulary
from ..decode import TwoLevelDecoder, sampling_policies
from ..errors import ShapeError
from ..med import (
    DrModel,
    dr_reduce,
    element_distance_matrix,
    latent_distance_matrix,
    regularization_loss,
    slice_latent,
)
from ..numerics import Module, Tensor, default_dtype
from ..numerics import tensor as T
from ..vqcore import Codebook, Encoder, commitment_loss
from .config import TrainConfig


class MusErModel(Module):
    """Token sequences in, latent codes and token logits out.

    Construction order (encoder, reducer, decoder, codebook) is fixed so a
    seed fully determines the initial parameters.
    """

    def __init__(self, config: TrainConfig, rng: np.random.Generator | None = None):
        config.validate()
        self.config = config
        self.vocab = vocabulary(config.vocab_preset)
        self.policies = sampling_policies(config.sampling_preset)
        if rng is None:
            rng = np.random.default_rng(config.seed)
        with default_dtype(config.dtype):
            self.encoder = Encoder(
                self.vocab.sizes, config.emb_sizes, config.enc_width,
                config.enc_heads, config.enc_ff, config.enc_layers,
                config.n_max, config.latent_width, rng, config.dropout,
            )
            self.dr = None
            if config.med and config.dr_mode == "transformer":
                self.dr = DrModel(
                    config.l, config.dr_width, config.dr_heads, config.dr_ff,
                    config.dr_layers, rng, config.dropout,
                )
            self.decoder = TwoLevelDecoder(
                self.vocab.sizes, config.emb_sizes,
                config.dec_g_width, config.dec_g_heads, config.dec_g_ff,
                config.dec_g_layers,
                config.dec_e_width, config.dec_e_heads, config.dec_e_ff,
                config.dec_e_layers,
                config.n_max, config.l, config.cond_mode, config.decoders,
                rng, config.dropout,
            )
        self.codebook = Codebook(
            config.k, config.latent_width, rng, dtype=np.dtype(config.dtype)
        )

    def _check_batch(self, tokens: np.ndarray) -> tuple[int, int]:
        if tokens.ndim != 3 or tokens.shape[-1] != len(TYPES):
            raise ShapeError(f"expected (m, N, {len(TYPES)}) tokens, got {tokens.shape}")
        m, n, _ = tokens.shape
        if n > self.config.n_max:
            raise ShapeError(f"sequence length {n} exceeds n_max {self.config.n_max}")
        return m, n

    def loss(self, tokens: np.ndarray, mask: np.ndarray | None = None,
             train_rng: np.random.Generator | None = None,
             identity_quantization: bool = False,
             ) -> tuple[Tensor, dict, dict]:
        """Total training loss on one padded batch.

        mask marks real (non-padding) steps; reconstruction averages over
        them. Returns (total, parts, aux): parts holds unweighted float
        summands, aux carries the codes and encoder outputs the codebook
        update needs. Pairwise regularization runs over the whole batch, pad
        steps included (their targets are sign 0).

        identity_quantization bypasses the codebook (z_q := z_e), removing
        the only non-differentiable step so finite differences can verify
        the full loss gradient.
        """
        m, n = self._check_batch(tokens)
        if mask is None:
            mask = np.ones((m, n), dtype=bool)
        mask = np.asarray(mask)
        if mask.shape != (m, n):
            raise ShapeError(f"mask {mask.shape} does not match tokens {(m, n)}")
        count = float(mask.sum())
        if count == 0:
            raise ShapeError("mask excludes every step")

        z_e = self.encoder(tokens, train_rng)
        if identity_quantization:
            codes = np.zeros((m, n), dtype=np.int64)
            z_q = z_e.values.copy()
        else:
            flat = z_e.values.reshape(m * n, self.config.latent_width)
            codes, z_q_flat = self.codebook.quantize(flat)
            codes = codes.reshape(m, n)
            z_q = z_q_flat.reshape(z_e.values.shape)

        commit = commitment_loss(z_e, z_q)
        z_st = T.straight_through(z_e, z_q)
        logits = self.decoder.teacher_logits(tokens, z_st, train_rng)

        mask_f = mask.astype(z_e.values.dtype)
        parts: dict[str, float] = {}
        rec_total: Tensor | None = None
        for col, name in enumerate(ELEMENTS):
            ce = T.cross_entropy(logits[name], tokens[:, :, col])
            term = T.scale(T.reduce_sum(T.mul(ce, T.constant(mask_f))), 1.0 / count)
            parts[f"rec_{name}"] = term.item()
            rec_total = term if rec_total is None else T.add(rec_total, term)
        parts["reconstruction"] = float(
            sum(parts[f"rec_{name}"] for name in ELEMENTS)
        )
        parts["commitment"] = commit.item()

        total = T.add(rec_total, T.scale(commit, self.config.beta))
        if self.config.med:
            reg = self.regularization(tokens, z_st, train_rng)
            parts["regularization"] = reg.item()
            if self.config.alpha != 0.0:
                total = T.add(total, T.scale(reg, self.config.alpha))
        parts["total"] = total.item()

        aux = {"codes": codes, "z_e": z_e.values, "mask": mask}
        return total, parts, aux

    def regularization(self, tokens: np.ndarray, z: Tensor,
                       train_rng: np.random.Generator | None = None) -> Tensor:
        """Sign-alignment loss between token and reduced-latent differences."""
        slices = slice_latent(z, self.config.l)
        reduced = dr_reduce(slices, self.dr, self.config.dr_mode, train_rng)
        token_dists = {
            name: element_distance_matrix(tokens[:, :, col])
            for col, name in enumerate(ELEMENTS)
        }
        latent_dists = {
            name: latent_distance_matrix(reduced[name]) for name in ELEMENTS
        }
        return regularization_loss(token_dists, latent_dists)

    def encode(self, tokens: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Quantize a batch outside training: (codes (m, N), z_q (m, N, L))."""
        m, n = self._check_batch(tokens)
        z_e = self.encoder(tokens).values
        codes, z_q = self.codebook.quantize(
            z_e.reshape(m * n, self.config.latent_width)
        )
        return codes.reshape(m, n), z_q.reshape(z_e.shape)

    def reduce_latents(self, tokens: np.ndarray) -> dict[str, np.ndarray]:
        """Per-element reduced latents (m, N) of a batch, no gradients."""
        _, z_q = self.encode(tokens)
        slices = slice_latent(T.constant(z_q), self.config.l)
        reduced = dr_reduce(slices, self.dr, self.config.dr_mode)
        return {name: reduced[name].values for name in ELEMENTS}

    def codes_to_latents(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes)
        if codes.ndim != 1:
            raise ShapeError(f"expected a flat code sequence, got {codes.shape}")
        if codes.min(initial=0) < 0 or codes.max(initial=0) >= self.config.k:
            raise ShapeError("code index out of codebook range")
        return self.codebook.entries[codes]

    def generate_from_codes(self, codes: np.ndarray, emotion: int,
                            rng: np.random.Generator,
                            max_len: int | None = None,
                            ) -> tuple[np.ndarray, dict]:
        z_q = self.codes_to_latents(codes)
        return self.decoder.generate(z_q, emotion, self.policies, rng, max_len)
