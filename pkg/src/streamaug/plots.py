"""Matplotlib figure rendering for the report path.

Each helper writes one PNG next to the delimited report output. All
figures use the Agg backend so they render headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

CATEGORY_COLORS = {
    "normal": "#7f7f7f",
    "mid_tail": "#1f77b4",
    "long_tail": "#ff7f0e",
    "extreme": "#d62728",
    "original": "#2ca02c",
}

_AXES = ("lss", "rhs", "ss", "as")


def _color(label: str) -> str:
    return CATEGORY_COLORS.get(label, "#9467bd")


def save_categorization_scatter(rows: list[dict], path: str | Path) -> None:
    """Per-user activity scatter: std of daily counts vs mean, colored by
    category. ``rows`` come from the categorization CSV."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    by_category: dict[str, tuple[list[float], list[float]]] = {}
    for row in rows:
        xs, ys = by_category.setdefault(row["category"], ([], []))
        xs.append(float(row["std"]))
        ys.append(float(row["mean"]))
    for category in sorted(by_category):
        xs, ys = by_category[category]
        ax.scatter(xs, ys, s=18, alpha=0.7, label=category, color=_color(category))
    ax.set_xlabel("std of daily review count")
    ax.set_ylabel("mean daily review count")
    ax.set_title("User activity by sparsity category")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_richness_bars(richness: dict[str, float], path: str | Path) -> None:
    """Average type-token ratio per text group."""
    labels = sorted(richness)
    values = [richness[k] for k in labels]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, values, color=[_color(k) for k in labels])
    ax.set_ylabel("avg type-token ratio")
    ax.set_ylim(0, 1)
    ax.set_title("Vocabulary richness by group")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_judge_bars(scores: dict[str, tuple[float, float, float, float]], path) -> None:
    """Grouped bars of the four judge axes per sparsity category."""
    categories = sorted(scores)
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(categories), 1)
    for i, category in enumerate(categories):
        xs = [j + i * width for j in range(len(_AXES))]
        ax.bar(xs, scores[category], width=width, label=category,
               color=_color(category))
    ax.set_xticks([j + width * (len(categories) - 1) / 2 for j in range(len(_AXES))])
    ax.set_xticklabels([a.upper() for a in _AXES])
    ax.set_ylim(0, 5)
    ax.set_ylabel("judge score")
    ax.set_title("Synthesized-review quality by category")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_timeline_hist(
    counts: dict[str, list[int]], n_intervals: int, path: str | Path
) -> None:
    """Stacked per-interval counts of synthesized events."""
    fig, ax = plt.subplots(figsize=(7, 4))
    bottom = [0] * n_intervals
    for category in sorted(counts):
        values = counts[category]
        ax.bar(range(n_intervals), values, bottom=bottom, label=category,
               color=_color(category))
        bottom = [b + v for b, v in zip(bottom, values)]
    ax.set_xlabel("timeline interval")
    ax.set_ylabel("synthesized events")
    ax.set_title("Temporal placement of synthesized events")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
