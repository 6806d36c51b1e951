"""Objective metrics, clustering scores, latent export, and reporting."""

from .distributions import (
    element_histograms,
    emd_1d,
    field_histogram,
    sign_agreement,
    write_histogram_csv,
)
from .latents import latent_table, pca_2d, pooled_latents, write_latent_csv
from .metrics import (
    METRIC_NAMES,
    bar_level,
    metrics_report,
    n_pitch_classes,
    piece_metrics,
    pitch_range,
    polyphony,
)
from .report import (
    format_metrics_table,
    histogram_figure,
    metrics_figure,
    projection_figure,
    write_metrics_csv,
    write_metrics_json,
    write_silhouette_csv,
)
from .silhouette import pair_silhouettes, silhouette

__all__ = [
    "METRIC_NAMES",
    "bar_level",
    "element_histograms",
    "emd_1d",
    "field_histogram",
    "format_metrics_table",
    "histogram_figure",
    "latent_table",
    "metrics_figure",
    "metrics_report",
    "n_pitch_classes",
    "pair_silhouettes",
    "pca_2d",
    "piece_metrics",
    "pitch_range",
    "polyphony",
    "pooled_latents",
    "projection_figure",
    "sign_agreement",
    "silhouette",
    "write_histogram_csv",
    "write_latent_csv",
    "write_metrics_csv",
    "write_metrics_json",
    "write_silhouette_csv",
]
