"""Evaluation suite: classification/regression metrics, RMSE-reduction
arithmetic, vocabulary richness, rating distributions, and the four-axis
judge rubric (language style / rating habit / sentiment / aspect)."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import EmptyInput, LengthMismatch, UnparseableOutput
from .llm import Backend, CompletionRequest, complete, stable_seed
from .reviews import ReviewEvent
from .templates import PromptTemplate, format_reviews

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

JUDGE_AXES = ("lss", "rhs", "ss", "as")


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    mse: float
    rmse: float
    mae: float
    n_samples: int

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class JudgeScores:
    lss: float
    rhs: float
    ss: float
    as_: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.lss, self.rhs, self.ss, self.as_)


def _check_pairs(predicted: Sequence[int], gold: Sequence[int]) -> None:
    if len(predicted) != len(gold):
        raise LengthMismatch(len(predicted), len(gold))
    if not gold:
        raise EmptyInput("no prediction/gold pairs")


def classification_metrics(
    predicted: Sequence[int], gold: Sequence[int]
) -> tuple[float, float, float, float]:
    """Accuracy plus macro-averaged precision/recall/F1.

    Per-class scores run over classes present in gold or predictions;
    a class with an undefined ratio (zero denominator) scores 0.
    """
    _check_pairs(predicted, gold)
    for v in list(predicted) + list(gold):
        if v not in (1, 2, 3, 4, 5):
            raise ValueError(f"rating {v!r} outside 1..5")
    n = len(gold)
    accuracy = sum(p == g for p, g in zip(predicted, gold)) / n
    classes = sorted(set(gold) | set(predicted))
    precisions, recalls, f1s = [], [], []
    for cls in classes:
        tp = sum(p == cls and g == cls for p, g in zip(predicted, gold))
        fp = sum(p == cls and g != cls for p, g in zip(predicted, gold))
        fn = sum(p != cls and g == cls for p, g in zip(predicted, gold))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        precisions.append(prec)
        recalls.append(rec)
        f1s.append(f1)
    k = len(classes)
    return accuracy, sum(precisions) / k, sum(recalls) / k, sum(f1s) / k


def regression_metrics(
    predicted: Sequence[float], gold: Sequence[float]
) -> tuple[float, float, float]:
    _check_pairs(predicted, gold)
    n = len(gold)
    mse = sum((p - g) ** 2 for p, g in zip(predicted, gold)) / n
    mae = sum(abs(p - g) for p, g in zip(predicted, gold)) / n
    return mse, math.sqrt(mse), mae


def metrics_report(predicted: Sequence[int], gold: Sequence[int]) -> MetricsReport:
    accuracy, precision, recall, f1 = classification_metrics(predicted, gold)
    mse, rmse, mae = regression_metrics(predicted, gold)
    return MetricsReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        mse=mse,
        rmse=rmse,
        mae=mae,
        n_samples=len(gold),
    )


def rmse_reduction(base_rmse: float, aug_rmse: float) -> float:
    """Signed percent improvement of aug over base (positive = better)."""
    if base_rmse == 0:
        raise ZeroDivisionError("base RMSE must be positive")
    return (base_rmse - aug_rmse) / base_rmse * 100.0


def tokenize(text: str) -> list[str]:
    """Lowercase tokens: maximal alphanumeric runs (underscore excluded)."""
    return _TOKEN_RE.findall(text.lower())


def type_token_ratio(text: str) -> float:
    tokens = tokenize(text)
    if not tokens:
        return 0.0
    return len(set(tokens)) / len(tokens)


def vocabulary_richness(texts: Sequence[str]) -> float:
    """Average per-text type-token ratio; empty texts count as 0."""
    if not texts:
        raise EmptyInput("no texts")
    return sum(type_token_ratio(t) for t in texts) / len(texts)


def class_distribution(events: Iterable[ReviewEvent]) -> list[float]:
    """Rating proportions ordered [5, 4, 3, 2, 1]; sums to 1."""
    counts = {r: 0 for r in (5, 4, 3, 2, 1)}
    total = 0
    for event in events:
        counts[event.rating] += 1
        total += 1
    if total == 0:
        raise EmptyInput("no events")
    return [counts[r] / total for r in (5, 4, 3, 2, 1)]


def _parse_judge_output(text: str) -> Optional[JudgeScores]:
    values = []
    for axis in JUDGE_AXES:
        # line-anchored so "ss:" cannot match inside "lss:"
        match = re.search(rf"(?m)^\s*{axis}:\s*(-?\d+(?:\.\d+)?)", text)
        if not match:
            return None
        value = float(match.group(1))
        if not 1.0 <= value <= 5.0:
            return None
        values.append(value)
    return JudgeScores(*values)


def judge_scores(
    synth: ReviewEvent,
    user_history: list[ReviewEvent],
    product_reviews: list[ReviewEvent],
    backend: Backend,
    rubric: PromptTemplate,
    *,
    seed: int = 0,
    parse_retries: int = 2,
    attempts_log: Optional[list[int]] = None,
) -> JudgeScores:
    """Four-axis quality scores for one synthesized review.

    One backend call per attempt; the output must carry all four axes as
    values in [1, 5], otherwise the call is retried up to parse_retries
    times before raising UnparseableOutput.
    """
    if not synth.is_synthesized:
        raise ValueError("judge_scores only applies to synthesized events")
    prompt = rubric.render(
        review=f"[rating {synth.rating}] {synth.text}",
        user_reviews=format_reviews(user_history),
        product_reviews=format_reviews(product_reviews),
    )
    attempts = 0
    for attempt in range(parse_retries + 1):
        attempts += 1
        output = complete(
            backend,
            CompletionRequest(
                prompt=prompt,
                seed=stable_seed(seed, "judge", synth.user_id, synth.timestamp, attempt),
                tag="judge",
            ),
        )
        scores = _parse_judge_output(output)
        if scores is not None:
            if attempts_log is not None:
                attempts_log.append(attempts)
            return scores
    raise UnparseableOutput(attempts, "expected lss/rhs/ss/as lines in [1,5]")
