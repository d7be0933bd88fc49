"""Timeline slot search and merge of synthesized events into the stream.

Every MidTail/LongTail/Extreme user gets one slot per empty timeline
interval. Filling proceeds earliest-first per user until the user reaches
``min_interactions`` total events, restricted to the front fraction of
the timeline (the Front-k% schedule). Original events are never touched.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .errors import MissingSynthesis
from .reviews import ReviewEvent, ReviewStream, SparsityCategory
from .sparsity import ActivitySeries, SparsityAssignment, activity_series

# An augmented stream is an ordinary stream whose events carry provenance.
AugmentedStream = ReviewStream


@dataclass(frozen=True)
class InterpolationSlot:
    user_id: str
    interval: int
    timestamp: int  # midpoint of the interval
    category: SparsityCategory


@dataclass
class InterpolationConfig:
    min_interactions: int = 10
    front_fraction: float = 1.0

    def __post_init__(self):
        if self.min_interactions < 1:
            raise ValueError("min_interactions must be positive")
        if not 0.0 <= self.front_fraction <= 1.0:
            raise ValueError("front_fraction must lie in [0, 1]")


@dataclass
class InterpolationLedger:
    front_fraction: float
    totals: dict[str, int] = field(default_factory=dict)  # slots found per category
    filled: dict[str, int] = field(default_factory=dict)  # slots filled per category
    per_user: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "front_fraction": self.front_fraction,
            "totals": dict(sorted(self.totals.items())),
            "filled": dict(sorted(self.filled.items())),
            "per_user": {u: self.per_user[u] for u in sorted(self.per_user)},
        }


def interpolation_factor(series: ActivitySeries) -> float:
    """Fraction of timeline intervals in which the user was inactive."""
    return series.counts.count(0) / len(series.counts)


def slot_timestamp(span: tuple[int, int], interval: int, n_intervals: int) -> int:
    t0, tn = span
    return t0 + ((2 * interval + 1) * (tn - t0)) // (2 * n_intervals)


def find_slots(
    stream: ReviewStream,
    assignments: list[SparsityAssignment],
    n_intervals: int,
) -> list[InterpolationSlot]:
    """One slot per empty interval for every non-Normal user."""
    span = stream.require_span()
    slots: list[InterpolationSlot] = []
    for assignment in assignments:
        if assignment.category is SparsityCategory.NORMAL:
            continue
        series = activity_series(stream, assignment.user_id, n_intervals)
        for interval, count in enumerate(series.counts):
            if count == 0:
                slots.append(
                    InterpolationSlot(
                        user_id=assignment.user_id,
                        interval=interval,
                        timestamp=slot_timestamp(span, interval, n_intervals),
                        category=assignment.category,
                    )
                )
    return slots


def plan_fills(
    stream: ReviewStream,
    slots: list[InterpolationSlot],
    cfg: InterpolationConfig,
) -> list[InterpolationSlot]:
    """Slots that will actually be filled under the config.

    Per user: earliest slots first, only intervals below the front
    cutoff, stopping once original + filled reaches min_interactions.
    """
    cutoff = math.ceil(cfg.front_fraction * stream.interval_count)
    counts = {u: len(es) for u, es in stream.events_by_user().items()}
    by_user: dict[str, list[InterpolationSlot]] = {}
    for slot in slots:
        by_user.setdefault(slot.user_id, []).append(slot)
    planned: list[InterpolationSlot] = []
    for user in sorted(by_user):
        need = max(0, cfg.min_interactions - counts.get(user, 0))
        eligible = [
            s for s in sorted(by_user[user], key=lambda s: s.interval)
            if s.interval < cutoff
        ]
        planned.extend(eligible[:need])
    return planned


def interpolate_dataset(
    stream: ReviewStream,
    slots: list[InterpolationSlot],
    synthesized: list[ReviewEvent],
    cfg: InterpolationConfig | None = None,
) -> tuple[AugmentedStream, InterpolationLedger]:
    """Merge synthesized events into their planned slots.

    Each synthesized event is matched to a slot by (user, timestamp); a
    planned slot without an event raises MissingSynthesis. Original
    events pass through byte-for-byte and keep their relative order.
    """
    cfg = cfg or InterpolationConfig()
    for slot in slots:
        if slot.interval >= stream.interval_count:
            raise ValueError(
                f"slot interval {slot.interval} outside the stream's "
                f"{stream.interval_count}-interval timeline"
            )
    planned = plan_fills(stream, slots, cfg)
    slot_keys = {(s.user_id, s.timestamp) for s in slots}
    pool: dict[tuple[str, int], deque[ReviewEvent]] = {}
    for event in synthesized:
        key = (event.user_id, event.timestamp)
        if key not in slot_keys:
            raise ValueError(
                f"synthesized event {key} does not correspond to any slot"
            )
        pool.setdefault(key, deque()).append(event)

    fills: list[ReviewEvent] = []
    for slot in planned:
        queue = pool.get((slot.user_id, slot.timestamp))
        if not queue:
            raise MissingSynthesis(slot.user_id, slot.timestamp)
        fills.append(queue.popleft())

    ledger = InterpolationLedger(front_fraction=cfg.front_fraction)
    for slot in slots:
        ledger.totals[slot.category.value] = (
            ledger.totals.get(slot.category.value, 0) + 1
        )
        entry = ledger.per_user.setdefault(
            slot.user_id,
            {"category": slot.category.value, "found": 0, "filled": 0},
        )
        entry["found"] += 1
    for slot in planned:
        ledger.filled[slot.category.value] = (
            ledger.filled.get(slot.category.value, 0) + 1
        )
        ledger.per_user[slot.user_id]["filled"] += 1

    # stable sort: originals precede fills on timestamp ties and keep order
    merged = sorted(stream.events + fills, key=lambda e: e.timestamp)
    augmented = ReviewStream(events=merged, interval_count=stream.interval_count)
    return augmented, ledger
