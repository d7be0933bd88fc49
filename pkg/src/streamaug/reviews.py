"""Canonical review event types plus ingestion of Amazon-style JSONL records.

Records follow the Amazon 2018 review field names (``overall``,
``reviewerID``, ``asin``, ``unixReviewTime``, ``reviewText``, ``summary``).
Serialized output carries two extra fields: ``provenance`` ("original" |
"synthesized") and ``sparsity_category``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import (
    EmptyStreamError,
    MissingField,
    ParseError,
    RatingOutOfRange,
)

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("overall", "reviewerID", "asin", "unixReviewTime")

PROVENANCE_ORIGINAL = "original"
PROVENANCE_SYNTHESIZED = "synthesized"


class SparsityCategory(str, Enum):
    NORMAL = "normal"
    MID_TAIL = "mid_tail"
    LONG_TAIL = "long_tail"
    EXTREME = "extreme"

    def __str__(self) -> str:  # category names appear in CSV/JSON artifacts
        return self.value


SPARSE_CATEGORIES = (
    SparsityCategory.MID_TAIL,
    SparsityCategory.LONG_TAIL,
    SparsityCategory.EXTREME,
)


def round_half_up(x: float) -> int:
    """Round positive values half-up (4.5 -> 5), unlike banker's round()."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ReviewEvent:
    """One timestamped user->product review.

    Synthesized events must carry a non-empty text and the sparsity
    category that triggered their synthesis.
    """

    user_id: str
    product_id: str
    timestamp: int
    rating: int
    text: str = ""
    summary: Optional[str] = None
    provenance: str = PROVENANCE_ORIGINAL
    sparsity_category: Optional[SparsityCategory] = None

    def __post_init__(self):
        if self.rating not in (1, 2, 3, 4, 5):
            raise RatingOutOfRange(self.rating)
        if self.timestamp < 0:
            raise ValueError(f"negative timestamp {self.timestamp}")
        if self.provenance not in (PROVENANCE_ORIGINAL, PROVENANCE_SYNTHESIZED):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.provenance == PROVENANCE_SYNTHESIZED:
            if not self.text:
                raise ValueError("synthesized events must carry review text")
            if self.sparsity_category is None:
                raise ValueError("synthesized events must carry a category")

    @property
    def is_synthesized(self) -> bool:
        return self.provenance == PROVENANCE_SYNTHESIZED

    def to_record(self) -> dict:
        return {
            "overall": self.rating,
            "reviewerID": self.user_id,
            "asin": self.product_id,
            "unixReviewTime": self.timestamp,
            "reviewText": self.text,
            "summary": self.summary,
            "provenance": self.provenance,
            "sparsity_category": (
                self.sparsity_category.value if self.sparsity_category else None
            ),
        }

    def to_line(self) -> str:
        """Canonical single-line JSON form; stable byte-for-byte."""
        return json.dumps(self.to_record(), ensure_ascii=True, separators=(",", ":"))


@dataclass
class ReviewStream:
    """Chronologically ordered review events over a fixed time span.

    Events are sorted by timestamp (stable: ties keep ingestion order).
    ``interval_count`` is the timeline bucketization granularity used by
    the activity/interpolation machinery. Treat instances as immutable.
    """

    events: list[ReviewEvent] = field(default_factory=list)
    interval_count: int = 10
    span: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.interval_count < 1:
            raise ValueError("interval_count must be >= 1")
        if self.span is None and self.events:
            self.span = (self.events[0].timestamp, self.events[-1].timestamp)
        for prev, cur in zip(self.events, self.events[1:]):
            if cur.timestamp < prev.timestamp:
                raise ValueError("events must be sorted by timestamp")

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[ReviewEvent]:
        return iter(self.events)

    @classmethod
    def from_events(
        cls, events: Iterable[ReviewEvent], interval_count: int = 10
    ) -> "ReviewStream":
        ordered = sorted(events, key=lambda e: e.timestamp)
        return cls(events=ordered, interval_count=interval_count)

    def require_span(self) -> tuple[int, int]:
        if self.span is None:
            raise EmptyStreamError("stream has no events, span undefined")
        return self.span

    def users(self) -> set[str]:
        return {e.user_id for e in self.events}

    def products(self) -> set[str]:
        return {e.product_id for e in self.events}

    def events_by_user(self) -> dict[str, list[ReviewEvent]]:
        out: dict[str, list[ReviewEvent]] = {}
        for e in self.events:
            out.setdefault(e.user_id, []).append(e)
        return out

    def events_by_product(self) -> dict[str, list[ReviewEvent]]:
        out: dict[str, list[ReviewEvent]] = {}
        for e in self.events:
            out.setdefault(e.product_id, []).append(e)
        return out


def parse_review_line(line: str) -> ReviewEvent:
    """Parse one Amazon-schema JSON record into a ReviewEvent.

    ``overall`` is rounded half-up to an integer rating; the raw value
    must already lie in [1, 5]. Missing reviewText maps to "".
    """
    record = json.loads(line)
    if not isinstance(record, dict):
        raise ValueError("record is not a JSON object")
    for name in REQUIRED_FIELDS:
        if name not in record or record[name] is None:
            raise MissingField(name)
    overall = float(record["overall"])
    if not 1.0 <= overall <= 5.0:
        raise RatingOutOfRange(overall)
    category = record.get("sparsity_category")
    return ReviewEvent(
        user_id=str(record["reviewerID"]),
        product_id=str(record["asin"]),
        timestamp=int(record["unixReviewTime"]),
        rating=round_half_up(overall),
        text=record.get("reviewText") or "",
        summary=record.get("summary"),
        provenance=record.get("provenance", PROVENANCE_ORIGINAL),
        sparsity_category=SparsityCategory(category) if category else None,
    )


def load_dataset(
    path: str | Path, *, strict: bool = True, interval_count: int = 10
) -> ReviewStream:
    """Load a newline-delimited review file into a sorted ReviewStream.

    strict=True aborts on the first malformed line (ParseError with its
    line number); strict=False skips malformed lines with a warning.
    """
    events: list[ReviewEvent] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                events.append(parse_review_line(line))
            except Exception as exc:
                if strict:
                    raise ParseError(line_no, exc) from exc
                logger.warning("skipping line %d: %s", line_no, exc)
    if not events:
        raise EmptyStreamError(f"no events loaded from {path}")
    events.sort(key=lambda e: e.timestamp)  # stable: ties keep file order
    return ReviewStream(events=events, interval_count=interval_count)


def dump_stream(stream: ReviewStream, path: str | Path) -> None:
    """Write the stream in canonical line-JSON form (round-trip stable)."""
    with open(path, "w", encoding="utf-8") as fh:
        for event in stream.events:
            fh.write(event.to_line())
            fh.write("\n")


def split_train_test(
    stream: ReviewStream, ratio: float
) -> tuple[ReviewStream, ReviewStream]:
    """Chronological split: first floor(ratio*N) events train, rest test."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    if not stream.events:
        raise EmptyStreamError("cannot split an empty stream")
    cut = int(math.floor(ratio * len(stream.events)))
    train = ReviewStream(
        events=list(stream.events[:cut]), interval_count=stream.interval_count
    )
    test = ReviewStream(
        events=list(stream.events[cut:]), interval_count=stream.interval_count
    )
    return train, test
