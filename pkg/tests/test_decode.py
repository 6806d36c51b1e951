"""Tests for sampling and the two-level decoder."""

import numpy as np
import pytest

from muser.cprepr import (
    CpSequence,
    ELEMENTS,
    EMOTION,
    FAM_EOS,
    FAM_EMOTION,
    FAMILY,
    detokenize,
    vocabulary,
)
from muser.decode import (
    DESK_POLICIES,
    PAPER_POLICIES,
    GlobalDecoder,
    SamplingPolicy,
    TwoLevelDecoder,
    nucleus_mass,
    sample_token,
    sampling_policies,
)
from muser.errors import NumericFault, ShapeError, UsageError
from muser.numerics import Tape, tensor as T


def softmax(x):
    e = np.exp(x - np.max(x))
    return e / e.sum()


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def test_nucleus_hand_case():
    # softmax(2,1,0) = (.66524, .24473, .09003); the first two already reach
    # 0.9 cumulative mass, so index 2 is dropped and the rest renormalize.
    p = nucleus_mass(softmax(np.array([2.0, 1.0, 0.0])), 0.9)
    assert np.allclose(p, [0.73105858, 0.26894142, 0.0], atol=1e-8)
    assert p[2] == 0.0


def test_nucleus_top_p_one_keeps_all():
    probs = softmax(np.array([0.3, -1.0, 2.0, 0.0]))
    assert np.allclose(nucleus_mass(probs, 1.0), probs, atol=1e-12)


def test_nucleus_uniform_stable_order():
    # Ties broken by index: the smallest prefix reaching 0.5 is {0, 1}.
    p = nucleus_mass(np.full(4, 0.25), 0.5)
    assert np.allclose(p, [0.5, 0.5, 0.0, 0.0])


def test_sample_token_frequencies_match_nucleus():
    rng = np.random.default_rng(11)
    logits = np.array([2.0, 1.0, 0.0])
    policy = SamplingPolicy(1.0, 0.9)
    draws = np.array([sample_token(logits, policy, rng) for _ in range(4000)])
    assert not (draws == 2).any()
    freq0 = (draws == 0).mean()
    assert abs(freq0 - 0.731) < 0.03


def test_sample_token_low_temperature_is_argmax():
    rng = np.random.default_rng(0)
    logits = np.array([0.3, 1.7, -0.2, 1.1])
    policy = SamplingPolicy(1e-4, 1.0)
    for _ in range(20):
        assert sample_token(logits, policy, rng) == 1


def test_sample_token_respects_forbidden_mask():
    rng = np.random.default_rng(3)
    logits = np.array([5.0, 1.0, 0.0])
    forbidden = np.array([True, False, False])
    policy = SamplingPolicy(1e-4, 1.0)
    for _ in range(10):
        assert sample_token(logits, policy, rng, forbidden) == 1


def test_sample_token_all_masked_raises():
    rng = np.random.default_rng(3)
    with pytest.raises(NumericFault):
        sample_token(np.zeros(3), SamplingPolicy(1.0, 0.9), rng, np.ones(3, dtype=bool))


def test_sample_token_deterministic_for_seed():
    logits = np.random.default_rng(5).normal(size=20)
    a = [sample_token(logits, SamplingPolicy(1.3, 0.8), np.random.default_rng(42)) for _ in range(5)]
    b = [sample_token(logits, SamplingPolicy(1.3, 0.8), np.random.default_rng(42)) for _ in range(5)]
    assert a == b


def test_policy_validation():
    with pytest.raises(UsageError):
        SamplingPolicy(0.0, 0.9)
    with pytest.raises(UsageError):
        SamplingPolicy(1.0, 0.0)
    with pytest.raises(UsageError):
        SamplingPolicy(1.0, 1.5)


def test_policy_tables():
    paper = sampling_policies("paper")
    assert set(paper) == set(ELEMENTS)
    assert paper["velocity"] == SamplingPolicy(5.0, 1.00)
    assert paper["duration"] == SamplingPolicy(2.0, 0.90)
    assert paper["chord"] == SamplingPolicy(1.0, 0.99)
    assert paper["bar_beat"] == SamplingPolicy(1.2, 1.00)
    desk = sampling_policies("desk")
    assert all(p == SamplingPolicy(1.0, 0.90) for p in desk.values())
    with pytest.raises(UsageError):
        sampling_policies("nope")


# ---------------------------------------------------------------------------
# Decoder fixtures
# ---------------------------------------------------------------------------

VOCAB = vocabulary("desk")
EMB = {
    "family": 4, "bar_beat": 8, "tempo": 8, "chord": 8,
    "pitch": 8, "duration": 8, "velocity": 8, "emotion": 4,
}
L_SLICE = 2
WIDTH = 16
N_MAX = 32


def make_decoder(mode="global+element", cond="cross_attention", seed=0):
    rng = np.random.default_rng(seed)
    return TwoLevelDecoder(
        VOCAB.sizes, EMB,
        g_width=WIDTH, g_heads=4, g_ff=32, g_layers=1,
        e_width=WIDTH, e_heads=4, e_ff=32, e_layers=1,
        n_max=N_MAX, l=L_SLICE, cond_mode=cond, mode=mode, rng=rng,
    )


def sample_batch(m=2, n=6, seed=1):
    rng = np.random.default_rng(seed)
    tokens = np.zeros((m, n, 8), dtype=np.int64)
    tokens[:, 0, FAMILY] = FAM_EMOTION
    tokens[:, 0, EMOTION] = rng.integers(1, 5, m)
    tokens[:, 1] = [2, 1, 0, 0, 0, 0, 0, 0]
    tokens[:, 2] = [2, 2, 23, 0, 0, 0, 0, 0]
    for i in range(m):
        for t in range(3, n - 1):
            tokens[i, t] = [
                3, 0, 0, 0,
                rng.integers(1, VOCAB.size("pitch")),
                rng.integers(1, VOCAB.size("duration")),
                rng.integers(1, VOCAB.size("velocity")),
                0,
            ]
    z = rng.normal(size=(m, n, 7 * L_SLICE))
    return tokens, z


def all_logits(dec, tokens, z):
    return dec.teacher_logits(tokens, T.constant(z))


def warm_heads(dec, seed=99):
    """Give the zero-initialized output heads random weights so logits react
    to input perturbations."""
    rng = np.random.default_rng(seed)
    for name, p in dec.named_params():
        if ".head." in name and p.values.ndim == 2:
            p.values[...] = rng.normal(0.0, 0.05, p.values.shape)
    return dec


# ---------------------------------------------------------------------------
# Teacher-forced logits
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("mode", ["global+element", "global_only", "element_only"])
def test_seven_heads_with_vocab_shapes(mode):
    dec = make_decoder(mode)
    tokens, z = sample_batch()
    out = all_logits(dec, tokens, z)
    assert set(out) == set(ELEMENTS)
    assert "emotion" not in out
    for name in ELEMENTS:
        assert out[name].shape == (2, 6, VOCAB.size(name))


@pytest.mark.parametrize("mode", ["global+element", "global_only", "element_only"])
def test_zero_initialized_heads_start_uniform(mode):
    dec = make_decoder(mode)
    tokens, z = sample_batch()
    out = all_logits(dec, tokens, z)
    for name in ELEMENTS:
        assert np.all(out[name].values == 0.0)


def test_logits_do_not_depend_on_current_or_future_tokens():
    dec = make_decoder()
    warm_heads(dec)
    tokens, z = sample_batch()
    before = all_logits(dec, tokens, z)
    moved = tokens.copy()
    moved[0, 3, 4] = (moved[0, 3, 4] % (VOCAB.size("pitch") - 1)) + 1
    after = all_logits(dec, moved, z)
    # Pitch of token 3 feeds the decoder input at step 4, so steps <= 3 are
    # untouched for every head and later steps change for at least one.
    for name in ELEMENTS:
        assert np.array_equal(before[name].values[:, :4], after[name].values[:, :4])
    changed = any(
        not np.array_equal(before[name].values[0, 4:], after[name].values[0, 4:])
        for name in ELEMENTS
    )
    assert changed


def test_family_context_feeds_element_heads_at_current_step():
    dec = make_decoder(seed=5)
    warm_heads(dec)
    tokens, z = sample_batch(seed=2)
    before = all_logits(dec, tokens, z)
    moved = tokens.copy()
    moved[0, 3, FAMILY] = 2  # relabel the predicted family at step 3
    after = all_logits(dec, moved, z)
    assert np.array_equal(before["family"].values[:, :4], after["family"].values[:, :4])
    assert not np.array_equal(before["pitch"].values[0, 3], after["pitch"].values[0, 3])


def test_cross_attention_reads_future_latent_rows():
    dec = make_decoder(cond="cross_attention", seed=3)
    warm_heads(dec)
    tokens, z = sample_batch(seed=4)
    before = all_logits(dec, tokens, z)
    moved = z.copy()
    moved[0, 5, 3] += 1.0  # single coordinate of the last latent row
    after = all_logits(dec, tokens, moved)
    assert not np.array_equal(before["family"].values[0, 0], after["family"].values[0, 0])


def test_concat_conditioning_is_positionwise_causal():
    dec = make_decoder(cond="concat", seed=3)
    warm_heads(dec)
    tokens, z = sample_batch(seed=4)
    before = all_logits(dec, tokens, z)
    moved = z.copy()
    moved[0, 4, 3] += 1.0
    after = all_logits(dec, tokens, moved)
    for name in ELEMENTS:
        assert np.array_equal(before[name].values[:, :4], after[name].values[:, :4])
    assert not np.array_equal(before["family"].values[0, 4:], after["family"].values[0, 4:])


def test_element_only_heads_read_only_their_slice():
    dec = make_decoder(mode="element_only", seed=7)
    warm_heads(dec)
    tokens, z = sample_batch(seed=8)
    before = all_logits(dec, tokens, z)
    moved = z.copy()
    moved[0, 2, 4 * L_SLICE] += 1.0  # first coordinate of the pitch slice
    after = all_logits(dec, tokens, moved)
    assert np.array_equal(before["family"].values, after["family"].values)
    assert np.array_equal(before["duration"].values, after["duration"].values)
    assert not np.array_equal(before["pitch"].values[0, 2:], after["pitch"].values[0, 2:])


def test_all_decoder_params_receive_gradients():
    dec = make_decoder(seed=9)
    tokens, z = sample_batch(seed=10)
    with Tape() as tape:
        out = all_logits(dec, tokens, z)
        losses = [
            T.reduce_mean(T.cross_entropy(out[name], tokens[:, :, col]))
            for col, name in enumerate(ELEMENTS)
        ]
        total = T.reduce_sum(T.concat([T.reshape(x, (1,)) for x in losses], axis=0))
        tape.backward(total)
    missing = [name for name, p in dec.named_params() if p.grad is None]
    assert missing == []


def test_width_mismatch_rejected():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeError):
        TwoLevelDecoder(
            VOCAB.sizes, EMB, g_width=16, g_heads=4, g_ff=32, g_layers=1,
            e_width=8, e_heads=4, e_ff=16, e_layers=1,
            n_max=N_MAX, l=L_SLICE, cond_mode="concat", mode="global+element",
            rng=rng,
        )


def test_concat_requires_aligned_latents():
    rng = np.random.default_rng(0)
    dec = GlobalDecoder(
        VOCAB.sizes, EMB, WIDTH, 4, 32, 1, N_MAX, 7 * L_SLICE, "concat", rng
    )
    tokens, z = sample_batch()
    with pytest.raises(ShapeError):
        dec(tokens, T.constant(z[:, :4]))


def test_unknown_modes_rejected():
    rng = np.random.default_rng(0)
    with pytest.raises(UsageError):
        TwoLevelDecoder(
            VOCAB.sizes, EMB, g_width=16, g_heads=4, g_ff=32, g_layers=1,
            e_width=16, e_heads=4, e_ff=32, e_layers=1,
            n_max=N_MAX, l=L_SLICE, cond_mode="cross_attention", mode="banana",
            rng=rng,
        )
    with pytest.raises(ShapeError):
        GlobalDecoder(VOCAB.sizes, EMB, WIDTH, 4, 32, 1, N_MAX, 14, "banana", rng)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("mode", ["global+element", "global_only", "element_only"])
@pytest.mark.parametrize("cond", ["cross_attention", "concat"])
def test_generate_produces_well_formed_sequences(mode, cond):
    dec = make_decoder(mode, cond, seed=13)
    z = np.random.default_rng(14).normal(size=(24, 7 * L_SLICE))
    tokens, info = dec.generate(z, emotion=3, policies=DESK_POLICIES,
                                rng=np.random.default_rng(15))
    assert info["ended_by_eos"]
    assert len(tokens) == info["length"] <= 24
    seq = CpSequence(tokens=tokens, vocab_preset="desk", emotion=3)
    seq.validate(VOCAB)
    # Grammar masking makes the result convertible without error.
    detokenize(seq, VOCAB)


def test_generate_is_deterministic_for_seed():
    dec = make_decoder(seed=21)
    z = np.random.default_rng(22).normal(size=(16, 7 * L_SLICE))
    a, _ = dec.generate(z, 1, DESK_POLICIES, np.random.default_rng(7))
    b, _ = dec.generate(z, 1, DESK_POLICIES, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_generate_emotion_only_at_opening():
    dec = make_decoder(seed=31)
    z = np.random.default_rng(32).normal(size=(32, 7 * L_SLICE))
    for trial in range(5):
        tokens, _ = dec.generate(z, 4, DESK_POLICIES, np.random.default_rng(trial))
        assert tokens[0, FAMILY] == FAM_EMOTION
        assert tokens[0, EMOTION] == 4
        assert not (tokens[1:, FAMILY] == FAM_EMOTION).any()
        assert tokens[-1, FAMILY] == FAM_EOS


def test_generate_respects_max_len():
    dec = make_decoder(seed=41)
    z = np.random.default_rng(42).normal(size=(30, 7 * L_SLICE))
    tokens, info = dec.generate(z, 2, DESK_POLICIES, np.random.default_rng(1),
                                max_len=9)
    assert len(tokens) <= 9
    assert tokens[-1, FAMILY] == FAM_EOS


def test_generate_rejects_bad_inputs():
    dec = make_decoder(seed=51)
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeError):
        dec.generate(np.zeros((8, 5)), 1, DESK_POLICIES, rng)
    with pytest.raises(UsageError):
        dec.generate(np.zeros((1, 7 * L_SLICE)), 1, DESK_POLICIES, rng)
    with pytest.raises(UsageError):
        dec.generate(np.zeros((8, 7 * L_SLICE)), 1, {"family": DESK_POLICIES["family"]}, rng)


def test_generate_paper_policies_also_work():
    dec = make_decoder(seed=61)
    z = np.random.default_rng(62).normal(size=(20, 7 * L_SLICE))
    tokens, _ = dec.generate(z, 1, PAPER_POLICIES, np.random.default_rng(5))
    CpSequence(tokens=tokens, vocab_preset="desk", emotion=1).validate(VOCAB)
