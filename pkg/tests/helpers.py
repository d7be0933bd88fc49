"""Shared fixture builders for the test suite."""

from __future__ import annotations

import json
import random
from pathlib import Path

from streamaug.reviews import ReviewEvent, ReviewStream

DAY = 86400
T0 = 1_356_998_400  # 2013-01-01

PHRASES = [
    "works as advertised and shipping was quick",
    "the build quality surprised me for the price",
    "gave this as a gift and it was well received",
    "stopped using it after a week, not for me",
    "solid value, would purchase again",
    "the instructions were confusing but it runs fine",
    "exactly matched the listing photos",
    "a bit overpriced for what you get",
]


def ev(
    user: str,
    product: str,
    t: int,
    rating: int = 5,
    text: str = "ok",
    **kwargs,
) -> ReviewEvent:
    return ReviewEvent(
        user_id=user, product_id=product, timestamp=t, rating=rating, text=text,
        **kwargs,
    )


def stream_of(*events: ReviewEvent, interval_count: int = 10) -> ReviewStream:
    return ReviewStream.from_events(events, interval_count=interval_count)


def amazon_record(
    user: str,
    product: str,
    t: int,
    overall: float = 5.0,
    text: str = "fine",
    summary: str | None = None,
) -> dict:
    record = {
        "overall": overall,
        "reviewerID": user,
        "asin": product,
        "unixReviewTime": t,
        "reviewText": text,
    }
    if summary is not None:
        record["summary"] = summary
    return record


def write_jsonl(path: Path, records: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record))
            fh.write("\n")
    return path


def random_bipartite_events(
    rng: random.Random,
    n_users: int,
    n_products: int,
    n_events: int,
    span_days: int = 100,
) -> list[ReviewEvent]:
    events = []
    times = sorted(rng.randrange(0, span_days * DAY) for _ in range(n_events))
    for t in times:
        events.append(
            ev(
                f"u{rng.randrange(n_users)}",
                f"p{rng.randrange(n_products)}",
                T0 + t,
                rating=rng.randint(1, 5),
                text=rng.choice(PHRASES),
            )
        )
    return events


def fixture_events(seed: int = 2024) -> list[ReviewEvent]:
    """50-user corpus covering all four sparsity categories.

    Normals review steadily, mid-tails in short bursts, long-tails touch
    popular products (rich second-order neighborhoods), extremes sit on
    isolated products.
    """
    rng = random.Random(seed)
    events: list[ReviewEvent] = []
    popular = [f"P{i}" for i in range(5)]
    niche = [f"Q{i}" for i in range(10)]
    isolated = [f"X{i}" for i in range(3)]

    def text() -> str:
        return rng.choice(PHRASES)

    def rating() -> int:
        return rng.choices((1, 2, 3, 4, 5), weights=(4, 4, 10, 32, 50))[0]

    for i in range(14):  # normal: 8 reviews spread over ~200 days
        user = f"N{i:02d}"
        for j in range(8):
            t = T0 + (j * 25 + rng.randrange(0, 20)) * DAY + rng.randrange(DAY)
            product = rng.choice(popular + niche)
            events.append(ev(user, product, t, rating(), text()))
    for i in range(6):  # mid-tail: 8 reviews bursting within a single day
        user = f"M{i}"
        burst = rng.randrange(0, 199) * DAY
        for j in range(8):
            t = T0 + burst + rng.randrange(DAY)
            product = rng.choice(popular + niche)
            events.append(ev(user, product, t, rating(), text()))
    for i in range(24):  # long-tail: 2-4 reviews on popular products
        user = f"L{i:02d}"
        for _ in range(rng.randint(2, 4)):
            t = T0 + rng.randrange(0, 200 * DAY)
            events.append(ev(user, rng.choice(popular), t, rating(), text()))
    for i in range(6):  # extreme: 1-2 reviews on isolated products
        user = f"E{i}"
        for _ in range(rng.randint(1, 2)):
            t = T0 + rng.randrange(0, 200 * DAY)
            events.append(ev(user, isolated[i % 3], t, rating(), text()))
    events.sort(key=lambda e: e.timestamp)
    return events


def events_to_records(events: list[ReviewEvent]) -> list[dict]:
    return [
        amazon_record(e.user_id, e.product_id, e.timestamp, float(e.rating), e.text)
        for e in events
    ]


def brute_second_order(events: list[ReviewEvent], user: str) -> set[str]:
    """Independent oracle: users sharing at least one product."""
    products = {e.product_id for e in events if e.user_id == user}
    out = {e.user_id for e in events if e.product_id in products}
    out.discard(user)
    return out


def bfs_depth2(events: list[ReviewEvent], start: str) -> set[str]:
    """Breadth-first search truncated at depth 2; returns the level-2 set."""
    adjacency: dict[str, set[str]] = {}
    for e in events:
        adjacency.setdefault(e.user_id, set()).add(e.product_id)
        adjacency.setdefault(e.product_id, set()).add(e.user_id)
    level0 = {start}
    level1 = adjacency.get(start, set()) - level0
    level2: set[str] = set()
    for node in level1:
        level2 |= adjacency.get(node, set())
    return level2 - {start}
