"""Tests for objective metrics, silhouette scoring, latent pooling, and
distribution helpers, each against an independent oracle where one exists."""

import math

import numpy as np
import pytest

from muser.cprepr import ELEMENTS, FAMILY, NoteEvent, Score, VELOCITY, vocabulary
from muser.errors import DataError, ShapeError
from muser.evaluation import (
    bar_level,
    element_histograms,
    emd_1d,
    field_histogram,
    format_metrics_table,
    metrics_report,
    n_pitch_classes,
    pair_silhouettes,
    pca_2d,
    piece_metrics,
    pitch_range,
    polyphony,
    pooled_latents,
    sign_agreement,
    silhouette,
    write_latent_csv,
    write_metrics_csv,
)
from muser.pipeline import MusErModel, build_corpus, desk_config, make_overfit_corpus


def note(pitch, onset, duration, velocity=64):
    return NoteEvent(pitch=pitch, onset=onset, duration=duration, velocity=velocity)


def unit_grid_score(notes):
    # ticks_per_beat=4 with 4 beats per bar puts one grid step per tick
    return Score(notes=notes, ticks_per_beat=4, beats_per_bar=4)


def random_score(rng, n_notes=None, bars=4):
    n = int(n_notes if n_notes is not None else rng.integers(1, 30))
    span = bars * 4 * 480
    notes = [
        note(
            int(rng.integers(30, 100)),
            int(rng.integers(0, span)),
            int(rng.integers(60, 960)),
            int(rng.integers(1, 128)),
        )
        for _ in range(n)
    ]
    return Score(notes=notes)


# ---------------------------------------------------------------------------
# Piece-level metrics
# ---------------------------------------------------------------------------


def test_pitch_range_hand_cases():
    assert pitch_range(Score(notes=[note(60, 0, 100), note(67, 0, 100),
                                    note(72, 0, 100)])) == 12
    assert pitch_range(Score(notes=[note(60, 0, 100)])) == 0


def test_pitch_range_matches_scan_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        score = random_score(rng)
        lo = hi = score.notes[0].pitch
        for n in score.notes:
            lo, hi = min(lo, n.pitch), max(hi, n.pitch)
        assert pitch_range(score) == hi - lo


def test_pitch_classes_hand_cases():
    assert n_pitch_classes(Score(notes=[note(p, 0, 10) for p in (60, 72, 67, 79)])) == 2
    assert n_pitch_classes(Score(notes=[note(60 + i, 0, 10) for i in range(12)])) == 12
    assert n_pitch_classes(Score(notes=[note(60, 0, 10)])) == 1


def test_polyphony_hand_cases():
    score = unit_grid_score([note(60, 0, 2), note(64, 1, 2)])
    assert abs(polyphony(score) - 4 / 3) < 1e-12
    apart = unit_grid_score([note(60, 0, 2), note(64, 10, 3)])
    assert polyphony(apart) == 1.0


def test_polyphony_matches_sweep_oracle():
    rng = np.random.default_rng(1)
    for _ in range(30):
        score = random_score(rng)
        grid = score.ticks_per_beat * score.beats_per_bar / 16
        spans = []
        for n in score.notes:
            start = int(round(n.onset / grid))
            spans.append((start, start + max(1, int(round(n.duration / grid)))))
        last = max(stop for _, stop in spans)
        counts = [
            sum(1 for start, stop in spans if start <= g < stop)
            for g in range(last)
        ]
        active = [c for c in counts if c > 0]
        assert abs(polyphony(score) - sum(active) / len(active)) < 1e-12
        assert polyphony(score) >= 1.0


def test_metrics_reject_empty_scores():
    empty = Score()
    for metric in (pitch_range, n_pitch_classes, polyphony):
        with pytest.raises(DataError):
            metric(empty)
    with pytest.raises(DataError):
        bar_level(pitch_range, empty)


# ---------------------------------------------------------------------------
# Bar-level metrics
# ---------------------------------------------------------------------------


def test_bar_level_two_bar_hand_case():
    bar_ticks = 4 * 480
    score = Score(notes=[
        note(60, 0, 100), note(64, 200, 100),            # bar 0, range 4
        note(60, bar_ticks, 100), note(72, bar_ticks + 200, 100),  # bar 1
    ])
    assert bar_level(pitch_range, score) == 8.0


def test_bar_level_single_bar_equals_piece():
    score = Score(notes=[note(60, 0, 200), note(70, 300, 500), note(65, 100, 900)])
    for metric in (pitch_range, n_pitch_classes, polyphony):
        assert bar_level(metric, score) == pytest.approx(metric(score), abs=1e-12)


def test_bar_level_never_exceeds_piece_level():
    rng = np.random.default_rng(2)
    for _ in range(50):
        score = random_score(rng)
        assert bar_level(pitch_range, score) <= pitch_range(score)
        assert bar_level(n_pitch_classes, score) <= n_pitch_classes(score)


def test_metrics_report_shape(tmp_path):
    rng = np.random.default_rng(3)
    scores = [random_score(rng) for _ in range(5)]
    report = metrics_report(scores)
    assert len(report["pieces"]) == 5
    vals = [row["PR"] for row in report["pieces"]]
    assert report["summary"]["PR"]["mean"] == pytest.approx(np.mean(vals))
    assert report["summary"]["PR"]["std"] == pytest.approx(np.std(vals))
    table = format_metrics_table(report)
    assert "B-NPC" in table and len(table.splitlines()) == 7
    path = tmp_path / "m.csv"
    write_metrics_csv(str(path), report)
    lines = path.read_text().splitlines()
    assert lines[0] == "piece,PR,NPC,POLY,B-PR,B-NPC,B-POLY"
    assert len(lines) == 6
    with pytest.raises(DataError):
        metrics_report([])


# ---------------------------------------------------------------------------
# Silhouette
# ---------------------------------------------------------------------------


def silhouette_oracle(points, labels):
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    scores = []
    for i in range(len(points)):
        own = [j for j in range(len(points)) if labels[j] == labels[i] and j != i]
        if not own:
            scores.append(0.0)
            continue
        a = np.mean([np.linalg.norm(points[i] - points[j]) for j in own])
        b = math.inf
        for g in set(labels.tolist()):
            if g == labels[i]:
                continue
            other = [j for j in range(len(points)) if labels[j] == g]
            b = min(b, np.mean([np.linalg.norm(points[i] - points[j])
                                for j in other]))
        top = max(a, b)
        scores.append(0.0 if top == 0 else (b - a) / top)
    return float(np.mean(scores))


def test_silhouette_hand_case():
    value = silhouette(np.array([[0.0], [1.0], [10.0]]), np.array([0, 0, 1]))
    assert abs(value - (0.9 + 8 / 9) / 3) < 1e-12
    assert abs(value - 0.5963) < 1e-4


def test_silhouette_far_clusters_approach_one():
    rng = np.random.default_rng(4)
    a = rng.normal(0, 1e-3, (10, 3))
    b = rng.normal(0, 1e-3, (10, 3)) + 1e6
    pts = np.concatenate([a, b])
    labels = np.array([0] * 10 + [1] * 10)
    assert silhouette(pts, labels) > 0.999999


def test_silhouette_matches_oracle_on_random_sets():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(2, 15))
        d = int(rng.integers(1, 4))
        pts = rng.normal(0, 1, (n, d))
        labels = rng.integers(0, 3, n)
        while len(set(labels.tolist())) < 2:
            labels = rng.integers(0, 3, n)
        got = silhouette(pts, labels)
        assert abs(got - silhouette_oracle(pts, labels)) < 1e-9
        assert -1.0 <= got <= 1.0


def test_silhouette_translation_and_scale_invariant():
    rng = np.random.default_rng(6)
    pts = rng.normal(0, 1, (12, 2))
    labels = rng.integers(0, 2, 12)
    labels[0], labels[1] = 0, 1
    base = silhouette(pts, labels)
    assert silhouette(pts * 3.7 + 11.0, labels) == pytest.approx(base, abs=1e-12)


def test_silhouette_edge_cases():
    with pytest.raises(DataError):
        silhouette(np.zeros((3, 2)), np.array([1, 1, 1]))
    # Every point a singleton: all scores fall back to 0.
    assert silhouette(np.arange(6).reshape(3, 2), np.array([0, 1, 2])) == 0.0
    # Coincident points across clusters: a = b = 0 scores 0.
    assert silhouette(np.zeros((4, 2)), np.array([0, 0, 1, 1])) == 0.0


def test_pair_silhouettes_restrict_to_pairs():
    pts = np.array([[0.0], [0.5], [10.0], [10.5], [20.0]])
    labels = np.array([1, 1, 2, 2, 3])
    pairs = pair_silhouettes(pts, labels)
    assert set(pairs) == {(1, 2), (1, 3), (2, 3)}
    only = silhouette(pts[:4], labels[:4])
    assert pairs[(1, 2)] == pytest.approx(only, abs=1e-12)


# ---------------------------------------------------------------------------
# Latent pooling and PCA
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_model_corpus():
    cfg = desk_config(n_max=16, k=8, dropout=0.0, seed=0)
    model = MusErModel(cfg)
    corpus = build_corpus(make_overfit_corpus(4, seed=2), cfg.n_max)
    return model, corpus


def test_pooled_latents_row_count_and_manual_mean(small_model_corpus):
    model, corpus = small_model_corpus
    pooled = pooled_latents(model, corpus)
    assert set(pooled) == set(ELEMENTS)
    for name in ELEMENTS:
        assert pooled[name].shape == (4, model.config.l)
    from muser.med import element_bounds

    _, z_q = model.encode(corpus.tokens)
    lo, hi = element_bounds(model.config.latent_width)["pitch"]
    manual = z_q[2, corpus.mask[2], lo:hi].mean(axis=0)
    assert np.allclose(pooled["pitch"][2], manual, atol=1e-12)


def test_latent_csv_schema(tmp_path, small_model_corpus):
    model, corpus = small_model_corpus
    pooled = pooled_latents(model, corpus)
    path = tmp_path / "latents.csv"
    write_latent_csv(str(path), pooled, corpus.emotions)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + 4 * 7  # header + one row per (piece, element)
    header = lines[0].split(",")
    assert header == ["piece", "emotion", "element", "z0", "z1", "z2", "z3"]
    assert all(len(line.split(",")) == model.config.l + 3 for line in lines[1:])


def test_pca_preserves_planar_distances():
    rng = np.random.default_rng(7)
    basis = np.linalg.qr(rng.normal(0, 1, (5, 2)))[0]  # orthonormal 2-D plane
    coords = rng.normal(0, 2, (40, 2))
    pts = coords @ basis.T + rng.normal(0, 1, 5)
    proj = pca_2d(pts)
    assert proj.shape == (40, 2)
    orig = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
    new = np.linalg.norm(proj[:, None] - proj[None, :], axis=-1)
    assert np.abs(orig - new).max() < 1e-9


def test_pca_rejections():
    with pytest.raises(ShapeError):
        pca_2d(np.zeros((4,)))
    with pytest.raises(ShapeError):
        pca_2d(np.zeros((4, 1)))


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------


def test_histogram_excludes_empty_and_recounts():
    seqs = make_overfit_corpus(4, seed=0)
    vocab = vocabulary("desk")
    hists = element_histograms(seqs, vocab)
    for name in ELEMENTS:
        field = list(ELEMENTS).index(name)
        for emotion, counts in hists[name].items():
            expected = 0
            for seq in seqs:
                if seq.emotion != emotion:
                    continue
                col = seq.tokens[:, field]
                expected += len(col) if field == FAMILY else int((col != 0).sum())
            assert counts.sum() == expected
    # family histogram: notes dominate, EOS and emotion get one count each
    fam = sum(hists["family"].values())
    assert fam[3] > fam[2] > 0 and fam[0] == 4 and fam[1] == 4


def test_field_histogram_zero_exclusion():
    tokens = np.zeros((5, 8), dtype=np.int64)
    tokens[2, VELOCITY] = 3
    tokens[3, VELOCITY] = 3
    hist = field_histogram(tokens, VELOCITY, 9)
    assert hist[0] == 0 and hist[3] == 2 and hist.sum() == 2
    fam_hist = field_histogram(tokens, FAMILY, 4)
    assert fam_hist[0] == 5  # family zeros are real EOS rows, kept


def test_emd_hand_cases():
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 0.0, 1.0])
    assert emd_1d(a, a) == 0.0
    assert emd_1d(a, b) == pytest.approx(2.0)
    assert emd_1d(b, a) == pytest.approx(2.0)
    assert emd_1d(np.array([2.0, 2.0]), np.array([1.0, 1.0])) == 0.0
    with pytest.raises(DataError):
        emd_1d(np.zeros(3), b)
    with pytest.raises(ShapeError):
        emd_1d(np.zeros(3), np.zeros(4))


def test_sign_agreement_cases():
    m = np.array([[[0.0, 2.0], [-2.0, 0.0]]])
    aligned = np.array([[[0.0, 0.5], [-0.5, 0.0]]])
    flipped = -aligned
    assert sign_agreement(m, aligned) == 1.0
    assert sign_agreement(m, flipped) == 0.0
    half = np.array([[[0.0, 0.5], [0.5, 0.0]]])
    assert sign_agreement(m, half) == 0.5
    assert sign_agreement(np.zeros((2, 2, 3)), np.ones((2, 2, 3))) is None
    with pytest.raises(ShapeError):
        sign_agreement(np.zeros((2, 2)), np.zeros((2, 3)))


def test_figures_render(tmp_path, small_model_corpus):
    from muser.evaluation import (
        histogram_figure,
        metrics_figure,
        pair_silhouettes,
        projection_figure,
        write_histogram_csv,
        write_silhouette_csv,
    )

    rng = np.random.default_rng(8)
    report = metrics_report([random_score(rng) for _ in range(4)])
    metrics_figure(str(tmp_path / "metrics.png"), report)

    seqs = make_overfit_corpus(4, seed=0)
    hists = element_histograms(seqs, vocabulary("desk"))
    histogram_figure(str(tmp_path / "hist.png"), hists)
    write_histogram_csv(str(tmp_path / "hist.csv"), hists)

    model, corpus = small_model_corpus
    pooled = pooled_latents(model, corpus)
    projections = {name: pca_2d(pooled[name]) for name in ("pitch", "velocity")}
    projection_figure(str(tmp_path / "proj.png"), projections, corpus.emotions)

    labels = np.array([1, 1, 2, 2])
    scores = {"pitch": pair_silhouettes(pooled["pitch"], labels)}
    write_silhouette_csv(str(tmp_path / "sc.csv"), scores)

    for name in ("metrics.png", "hist.png", "proj.png", "hist.csv", "sc.csv"):
        assert (tmp_path / name).stat().st_size > 0
