"""Figure rendering for evaluation and tempo reports.

Everything here writes files; no interactive backend is ever touched, so
these are safe from batch jobs and tests.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import CorpusReport, EvalReport
from .tempo import HISTOGRAM_BIN_S, TempoEstimate

plt.rcParams.update(
    {
        "figure.dpi": 120,
        "figure.autolayout": True,
        "axes.grid": True,
        "grid.alpha": 0.3,
    }
)

_METRICS = ("wer", "mae_pitch", "mae_note", "mae_dur", "num_note")


def save_metric_distributions(
    reports: Sequence[EvalReport], out_dir: Path, prefix: str = "metrics"
) -> Path:
    """Histogram each per-excerpt metric into one panel figure."""
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, axes = plt.subplots(2, 3, figsize=(10.5, 6.0))
    for ax, name in zip(axes.flat, _METRICS):
        values = [getattr(r, name) for r in reports]
        values = [v for v in values if v is not None]
        if values:
            ax.hist(values, bins=min(30, max(5, len(values) // 4 + 1)), color="#4878b0")
        ax.set_title(name)
    axes.flat[-1].axis("off")
    path = out_dir / f"{prefix}_distributions.png"
    fig.savefig(path)
    plt.close(fig)
    return path


def save_corpus_summary(corpus: CorpusReport, out_dir: Path, prefix: str = "metrics") -> Path:
    """Bar chart of the corpus-level means."""
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [n for n in _METRICS if getattr(corpus, n) is not None]
    values = [getattr(corpus, n) for n in names]
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.bar(names, values, color="#4878b0")
    ax.set_ylabel("corpus mean")
    ax.set_title(f"{corpus.excerpt_count} excerpts")
    path = out_dir / f"{prefix}_corpus.png"
    fig.savefig(path)
    plt.close(fig)
    return path


def save_duration_fit(
    record_id: str,
    durations: Sequence[float],
    estimate: TempoEstimate,
    out_dir: Path,
) -> Path:
    """Duration histogram with the fitted multiplier grid overlaid."""
    out_dir.mkdir(parents=True, exist_ok=True)
    durations = list(durations)
    hi = max(durations) + HISTOGRAM_BIN_S
    edges = np.arange(0.0, hi + HISTOGRAM_BIN_S, HISTOGRAM_BIN_S)
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.hist(durations, bins=edges, color="#4878b0", label="durations")
    seen = set()
    for multiplier in estimate.multipliers:
        grid = float(multiplier) * estimate.quarter_period
        if grid <= hi and multiplier not in seen:
            seen.add(multiplier)
            ax.axvline(grid, color="#d1605e", linestyle="--", linewidth=1.0)
    ax.set_xlabel("duration (s)")
    ax.set_ylabel("count")
    ax.set_title(
        f"{record_id}: bpm={estimate.bpm}, residual={estimate.residual:.3g}, "
        f"n={estimate.retained_count}"
    )
    path = out_dir / f"bpm_{record_id}.png"
    fig.savefig(path)
    plt.close(fig)
    return path
