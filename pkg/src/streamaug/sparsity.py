"""Partition users into Normal / MidTail / LongTail / Extreme.

Sparse users (few reviews) split on second-order neighborhood size;
non-sparse users split by k-means over per-day activity statistics,
with high-variance clusters labeled MidTail.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput
from .graph import DynamicGraph
from .reviews import ReviewEvent, ReviewStream, SparsityCategory

SECONDS_PER_DAY = 86400


@dataclass(frozen=True)
class ActivitySeries:
    """Per-interval review counts for one user over the stream span."""

    user_id: str
    counts: tuple[int, ...]
    interval: float  # seconds per bucket


@dataclass(frozen=True)
class ActivityFeatures:
    """Statistics of a user's per-day review counts."""

    mean: float
    std_dev: float
    min: float
    max: float

    def as_vector(self) -> tuple[float, float, float, float]:
        return (self.mean, self.std_dev, self.min, self.max)


@dataclass(frozen=True)
class SparsityAssignment:
    user_id: str
    category: SparsityCategory
    features: ActivityFeatures
    second_order_count: int
    review_count: int


@dataclass
class SparsityConfig:
    sparse_threshold: int = 5
    second_order_threshold: int = 5
    kmeans_k: int = 4
    kmeans_max_iter: int = 100
    seed: int = 0


def bucket_index(timestamp: int, span: tuple[int, int], n_buckets: int) -> int:
    """Interval index of a timestamp: boundary timestamps belong to the
    earlier interval, the final endpoint to the last."""
    t0, tn = span
    total = tn - t0
    offset = timestamp - t0
    if offset < 0 or offset > total:
        raise ValueError(f"timestamp {timestamp} outside span {span}")
    if total == 0 or offset == 0:
        return 0
    # smallest i with i * total >= offset * n_buckets, shifted to 0-based
    return (offset * n_buckets + total - 1) // total - 1


def activity_series(stream: ReviewStream, user: str, n_intervals: int) -> ActivitySeries:
    """Review counts of ``user`` over ``n_intervals`` equal span slices.

    A user with no reviews yields an all-zero series.
    """
    if n_intervals < 1:
        raise ValueError("n_intervals must be >= 1")
    span = stream.require_span()
    counts = [0] * n_intervals
    for event in stream.events:
        if event.user_id == user:
            counts[bucket_index(event.timestamp, span, n_intervals)] += 1
    return ActivitySeries(
        user_id=user,
        counts=tuple(counts),
        interval=(span[1] - span[0]) / n_intervals,
    )


def interaction_variance(series: ActivitySeries) -> float:
    """Population variance (divisor T) of the per-interval counts."""
    return statistics.pvariance(series.counts)


def daily_activity_features(
    events: list[ReviewEvent], span: tuple[int, int]
) -> ActivityFeatures:
    """Mean/std/min/max of per-day review counts, zero days included."""
    t0, tn = span
    n_days = (tn - t0) // SECONDS_PER_DAY + 1
    per_day: dict[int, int] = {}
    for event in events:
        day = (event.timestamp - t0) // SECONDS_PER_DAY
        per_day[day] = per_day.get(day, 0) + 1
    total = sum(per_day.values())
    mean = total / n_days
    sq = sum(c * c for c in per_day.values())
    var = max(sq / n_days - mean * mean, 0.0)
    active_min = min(per_day.values()) if per_day else 0
    lo = 0 if len(per_day) < n_days else active_min
    hi = max(per_day.values()) if per_day else 0
    return ActivityFeatures(
        mean=mean, std_dev=var**0.5, min=float(lo), max=float(hi)
    )


def _zscore(X: np.ndarray) -> np.ndarray:
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    sigma[sigma == 0.0] = 1.0  # constant columns map to 0
    return (X - mu) / sigma


def _kmeans_pp_init(Z: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(Z)
    centroids = np.empty((k, Z.shape[1]), dtype=float)
    centroids[0] = Z[rng.integers(0, n)]
    for i in range(1, k):
        dist_sq = np.min(
            ((Z[:, None, :] - centroids[None, :i, :]) ** 2).sum(axis=2), axis=1
        )
        total = dist_sq.sum()
        if total == 0.0:
            idx = int(rng.integers(0, n))  # all points coincide
        else:
            idx = int(rng.choice(n, p=dist_sq / total))
        centroids[i] = Z[idx]
    return centroids


def kmeans_fit(
    points, k: int, seed: int, max_iter: int = 100
) -> tuple[list[int], np.ndarray]:
    """Lloyd's iterations from seeded k-means++ starts.

    Features are z-score standardized before clustering; returned
    centroids are in the original feature space. Deterministic for a
    fixed seed; converges when assignments stop changing. An empty
    cluster is reseeded once per sweep to the point farthest from its
    assigned centroid, and tolerated if it stays empty.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise DegenerateInput("points must be a 2-d array of feature vectors")
    if k < 1 or k > len(X):
        raise DegenerateInput(f"k={k} incompatible with {len(X)} points")
    Z = _zscore(X)
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(Z, k, rng)
    labels: np.ndarray | None = None
    for _ in range(max_iter):
        dist = ((Z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            mask = labels == j
            if mask.any():
                centroids[j] = Z[mask].mean(axis=0)
            else:
                farthest = int(dist[np.arange(len(Z)), labels].argmax())
                centroids[j] = Z[farthest]
    assert labels is not None
    out_centroids = np.empty((k, X.shape[1]), dtype=float)
    mu = X.mean(axis=0)
    sigma = np.where(X.std(axis=0) == 0.0, 1.0, X.std(axis=0))
    for j in range(k):
        mask = labels == j
        if mask.any():
            out_centroids[j] = X[mask].mean(axis=0)
        else:
            out_centroids[j] = centroids[j] * sigma + mu
    return labels.tolist(), out_centroids


def categorize_users(
    stream: ReviewStream,
    graph: DynamicGraph,
    cfg: SparsityConfig | None = None,
) -> list[SparsityAssignment]:
    """Assign exactly one sparsity category to every user in the stream.

    Users with <= sparse_threshold reviews split on second-order
    neighborhood size (LongTail vs Extreme). The rest are clustered by
    per-day activity features; clusters whose centroid std exceeds the
    median centroid std become MidTail, the others Normal. With fewer
    non-sparse users than k, a plain std-above-median split applies.
    """
    cfg = cfg or SparsityConfig()
    span = stream.require_span()
    by_user = stream.events_by_user()
    assignments: dict[str, SparsityAssignment] = {}
    nonsparse: list[tuple[str, ActivityFeatures]] = []
    for user in sorted(by_user):
        events = by_user[user]
        features = daily_activity_features(events, span)
        n_second = len(graph.second_order_neighbors(user))
        if len(events) <= cfg.sparse_threshold:
            category = (
                SparsityCategory.LONG_TAIL
                if n_second >= cfg.second_order_threshold
                else SparsityCategory.EXTREME
            )
            assignments[user] = SparsityAssignment(
                user, category, features, n_second, len(events)
            )
        else:
            nonsparse.append((user, features))

    if len(nonsparse) >= cfg.kmeans_k:
        matrix = [f.as_vector() for _, f in nonsparse]
        labels, centroids = kmeans_fit(
            matrix, cfg.kmeans_k, cfg.seed, cfg.kmeans_max_iter
        )
        median_std = statistics.median(centroids[:, 1])
        mid_clusters = {
            j for j in range(cfg.kmeans_k) if centroids[j, 1] > median_std
        }
        label_of = dict(zip((u for u, _ in nonsparse), labels))
    elif nonsparse:
        median_std = statistics.median(f.std_dev for _, f in nonsparse)
        mid_clusters = {1}
        label_of = {
            u: (1 if f.std_dev > median_std else 0) for u, f in nonsparse
        }
    else:
        mid_clusters, label_of = set(), {}

    for user, features in nonsparse:
        category = (
            SparsityCategory.MID_TAIL
            if label_of[user] in mid_clusters
            else SparsityCategory.NORMAL
        )
        assignments[user] = SparsityAssignment(
            user,
            category,
            features,
            len(graph.second_order_neighbors(user)),
            len(by_user[user]),
        )
    return [assignments[user] for user in sorted(assignments)]
