"""Quality report over an augmented stream: vocabulary richness and
judge-score tables (CSV) plus rendered figures (PNG)."""

from __future__ import annotations

import csv
import random
from pathlib import Path
from typing import Optional

from .llm import Backend, stable_seed
from .metrics import JUDGE_AXES, judge_scores, vocabulary_richness
from .reviews import ReviewEvent, ReviewStream
from .sparsity import bucket_index
from . import plots


def _cap_events(events: list[ReviewEvent], limit: int, seed: int) -> list[ReviewEvent]:
    if len(events) <= limit:
        return events
    rng = random.Random(seed)
    picks = sorted(rng.sample(range(len(events)), limit))
    return [events[i] for i in picks]


def richness_table(stream: ReviewStream) -> list[dict]:
    """Average TTR for original texts and each synthesized category."""
    groups: dict[str, list[str]] = {"original": []}
    for event in stream.events:
        if event.is_synthesized:
            groups.setdefault(event.sparsity_category.value, []).append(event.text)
        else:
            groups["original"].append(event.text)
    rows = []
    for label in sorted(groups):
        texts = groups[label]
        if not texts:
            continue
        rows.append(
            {
                "group": label,
                "richness": vocabulary_richness(texts),
                "n_texts": len(texts),
            }
        )
    return rows


def judge_table(
    stream: ReviewStream,
    backend: Backend,
    rubric,
    *,
    seed: int = 0,
    limit_per_category: int = 25,
    context_limit: int = 5,
) -> list[dict]:
    """Mean judge scores per category over a seeded sample of
    synthesized events; context blocks hold original reviews only."""
    by_user = {}
    by_product = {}
    synthesized: dict[str, list[ReviewEvent]] = {}
    for event in stream.events:
        if event.is_synthesized:
            synthesized.setdefault(event.sparsity_category.value, []).append(event)
        else:
            by_user.setdefault(event.user_id, []).append(event)
            by_product.setdefault(event.product_id, []).append(event)

    rows = []
    for category in sorted(synthesized):
        sample = _cap_events(
            synthesized[category],
            limit_per_category,
            stable_seed(seed, "judge_sample", category),
        )
        sums = [0.0] * 4
        for event in sample:
            history = _cap_events(
                by_user.get(event.user_id, []),
                context_limit,
                stable_seed(seed, "hist", event.user_id),
            )
            product_ctx = _cap_events(
                by_product.get(event.product_id, []),
                context_limit,
                stable_seed(seed, "prod", event.product_id),
            )
            scores = judge_scores(
                event, history, product_ctx, backend, rubric, seed=seed
            )
            for i, value in enumerate(scores.as_tuple()):
                sums[i] += value
        n = len(sample)
        row = {"category": category, "n_judged": n}
        for axis, total in zip(JUDGE_AXES, sums):
            row[axis] = total / n if n else 0.0
        rows.append(row)
    return rows


def synthesized_timeline(stream: ReviewStream) -> dict[str, list[int]]:
    span = stream.require_span()
    counts: dict[str, list[int]] = {}
    for event in stream.events:
        if not event.is_synthesized:
            continue
        idx = bucket_index(event.timestamp, span, stream.interval_count)
        counts.setdefault(
            event.sparsity_category.value, [0] * stream.interval_count
        )[idx] += 1
    return counts


def write_report(
    stream: ReviewStream,
    backend: Backend,
    rubric,
    out_dir: str | Path,
    *,
    seed: int = 0,
    judge_limit: int = 25,
    categorization_rows: Optional[list[dict]] = None,
) -> dict[str, Path]:
    """Write richness.csv + judge_scores.csv and render the figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, Path] = {}

    richness_rows = richness_table(stream)
    richness_path = out / "richness.csv"
    with open(richness_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["group", "richness", "n_texts"])
        writer.writeheader()
        for row in richness_rows:
            writer.writerow({**row, "richness": f"{row['richness']:.6f}"})
    artifacts["richness"] = richness_path
    plots.save_richness_bars(
        {row["group"]: row["richness"] for row in richness_rows},
        out / "richness.png",
    )
    artifacts["richness_figure"] = out / "richness.png"

    judge_rows = judge_table(
        stream, backend, rubric, seed=seed, limit_per_category=judge_limit
    )
    judge_path = out / "judge_scores.csv"
    with open(judge_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["category", "n_judged", *JUDGE_AXES]
        )
        writer.writeheader()
        for row in judge_rows:
            writer.writerow(
                {**row, **{a: f"{row[a]:.4f}" for a in JUDGE_AXES}}
            )
    artifacts["judge_scores"] = judge_path
    if judge_rows:
        plots.save_judge_bars(
            {r["category"]: tuple(r[a] for a in JUDGE_AXES) for r in judge_rows},
            out / "judge_scores.png",
        )
        artifacts["judge_figure"] = out / "judge_scores.png"

    timeline = synthesized_timeline(stream)
    if timeline:
        plots.save_timeline_hist(
            timeline, stream.interval_count, out / "timeline.png"
        )
        artifacts["timeline_figure"] = out / "timeline.png"

    if categorization_rows:
        plots.save_categorization_scatter(
            categorization_rows, out / "categorization.png"
        )
        artifacts["categorization_figure"] = out / "categorization.png"
    return artifacts
