"""Delimited, JSON, and figure output for evaluation results."""

from __future__ import annotations

import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from ..cprepr import ELEMENTS, EMOTION_NAMES
from .metrics import METRIC_NAMES


def write_metrics_csv(path: str, report: dict):
    """CSV with one row per piece; columns piece + the six metrics."""
    with open(path, "w") as fh:
        fh.write("piece," + ",".join(METRIC_NAMES) + "\n")
        for row in report["pieces"]:
            cells = [row["piece"]] + [repr(row[name]) for name in METRIC_NAMES]
            fh.write(",".join(cells) + "\n")


def write_metrics_json(path: str, report: dict):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def format_metrics_table(report: dict) -> str:
    """Aligned text table of mean and standard deviation per metric."""
    lines = [f"{'metric':<8} {'mean':>10} {'std':>10}"]
    for name in METRIC_NAMES:
        cell = report["summary"][name]
        lines.append(f"{name:<8} {cell['mean']:>10.4f} {cell['std']:>10.4f}")
    return "\n".join(lines)


def metrics_figure(path: str, report: dict):
    """Bar chart of metric means with standard-deviation whiskers."""
    means = [report["summary"][n]["mean"] for n in METRIC_NAMES]
    stds = [report["summary"][n]["std"] for n in METRIC_NAMES]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(range(len(METRIC_NAMES)), means, yerr=stds, capsize=4,
           color="#4878b0")
    ax.set_xticks(range(len(METRIC_NAMES)))
    ax.set_xticklabels(METRIC_NAMES)
    ax.set_ylabel("value")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _emotion_name(label: int) -> str:
    if 0 <= label < len(EMOTION_NAMES):
        return EMOTION_NAMES[label]
    return str(label)


def histogram_figure(path: str, hists: dict[str, dict[int, np.ndarray]]):
    """One panel per element: value distributions split by emotion label."""
    fig, axes = plt.subplots(len(ELEMENTS), 1,
                             figsize=(7, 1.9 * len(ELEMENTS)), sharex=False)
    for ax, name in zip(np.atleast_1d(axes), ELEMENTS):
        groups = hists.get(name, {})
        labels = sorted(groups)
        width = 0.8 / max(len(labels), 1)
        for j, emotion in enumerate(labels):
            counts = groups[emotion]
            xs = np.arange(len(counts)) + j * width
            ax.bar(xs, counts, width=width, label=_emotion_name(emotion))
        ax.set_ylabel(name, fontsize=8)
        if labels and name == ELEMENTS[0]:
            ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def projection_figure(path: str, projections: dict[str, np.ndarray], emotions):
    """Scatter of each element's 2-D latent projection, colored by emotion."""
    emotions = np.asarray(emotions)
    fig, axes = plt.subplots(1, len(projections),
                             figsize=(2.6 * len(projections), 2.8))
    for ax, (name, pts) in zip(np.atleast_1d(axes), sorted(projections.items())):
        for label in sorted(set(int(e) for e in emotions)):
            keep = emotions == label
            ax.scatter(pts[keep, 0], pts[keep, 1], s=12,
                       label=_emotion_name(label))
        ax.set_title(name, fontsize=9)
        ax.tick_params(labelsize=7)
    np.atleast_1d(axes)[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_silhouette_csv(path: str, scores: dict[str, dict[tuple[int, int], float]]):
    """CSV with columns element, pair, score for every quadrant pair."""
    with open(path, "w") as fh:
        fh.write("element,pair,score\n")
        for name in sorted(scores):
            for (ga, gb), value in sorted(scores[name].items()):
                pair = f"{_emotion_name(ga)}-{_emotion_name(gb)}"
                fh.write(f"{name},{pair},{repr(float(value))}\n")
