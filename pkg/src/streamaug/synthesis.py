"""Profile generation and pseudo-review synthesis for sparse users.

Three category pipelines share the same building blocks: sampled review
sets, LLM-generated user/product profiles, second-order product
selection, and a final synthesis call that yields a parseable
"rating/review" pair. Mid-tail users are profiled from their own
history; long-tail users borrow local and global second-order context;
extreme users get a predefined profile and high-rated proxy products.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import (
    EmptyHistory,
    InsufficientNeighbors,
    NoCandidates,
    RatingOutOfRange,
    UnparseableOutput,
)
from .graph import DynamicGraph
from .interpolation import InterpolationSlot
from .llm import Backend, CompletionRequest, complete, stable_seed
from .reviews import (
    PROVENANCE_SYNTHESIZED,
    ReviewEvent,
    ReviewStream,
    SparsityCategory,
)
from .templates import PromptTemplate, format_profiles, format_reviews

KIND_USER = "user"
KIND_PRODUCT = "product"
SOURCE_GENERATED = "generated"
SOURCE_PREDEFINED = "predefined"

# Fallback persona for extreme users when the config provides none.
DEFAULT_PREDEFINED_PROFILE = (
    "A new shopper with no public history. Assume mainstream tastes, a "
    "preference for well-reviewed items, and brief, polite review language."
)


@dataclass(frozen=True)
class Profile:
    entity_id: str
    kind: str  # "user" | "product"
    text: str
    source: str = SOURCE_GENERATED
    supporting_reviews: tuple[int, ...] = ()  # stream indices of samples

    def __post_init__(self):
        if not self.text:
            raise ValueError("profile text must be non-empty")
        if self.kind not in (KIND_USER, KIND_PRODUCT):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.source == SOURCE_PREDEFINED and self.kind != KIND_USER:
            raise ValueError("predefined profiles are only valid for users")


@dataclass
class SynthesisConfig:
    review_sample_limit: int = 5
    candidate_limit: int = 10
    select_k: int = 3
    parse_retries: int = 2
    high_rated_count: int = 3
    predefined_profile: str = DEFAULT_PREDEFINED_PROFILE


@dataclass
class RunReport:
    """Audit trail of one synthesis run: prompts, attempts, fallbacks."""

    backend: str = ""
    calls: list[dict] = field(default_factory=list)
    fallbacks: list[dict] = field(default_factory=list)

    def record_call(self, tag: str, prompt: str, attempts: int = 1) -> None:
        self.calls.append(
            {
                "tag": tag,
                "prompt_sha256": hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
                "attempts": attempts,
            }
        )

    def record_fallback(self, kind: str, entity: str, detail: str = "") -> None:
        self.fallbacks.append({"kind": kind, "entity": entity, "detail": detail})

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "n_calls": len(self.calls),
            "calls": self.calls,
            "fallbacks": self.fallbacks,
        }

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _cap(indexed, limit, seed):
    """Seeded uniform subsample keeping chronological order."""
    if len(indexed) <= limit:
        return indexed
    rng = random.Random(seed)
    picks = sorted(rng.sample(range(len(indexed)), limit))
    return [indexed[i] for i in picks]


def select_reviews(
    entity: str,
    kind: str,
    stream: ReviewStream,
    limit: int,
    seed: int,
    until: Optional[int] = None,
) -> list[tuple[int, ReviewEvent]]:
    """Seeded uniform sample (without replacement) of an entity's reviews.

    Returns (stream index, event) pairs in chronological order; all
    reviews when the entity has no more than ``limit``.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if kind not in (KIND_USER, KIND_PRODUCT):
        raise ValueError(f"unknown entity kind {kind!r}")
    key = (lambda e: e.user_id) if kind == KIND_USER else (lambda e: e.product_id)
    indexed = [
        (i, e)
        for i, e in enumerate(stream.events)
        if key(e) == entity and (until is None or e.timestamp <= until)
    ]
    if not indexed:
        raise EmptyHistory(entity)
    return _cap(indexed, limit, seed)


def _profile_request(prompt: str, seed: int, tag: str) -> CompletionRequest:
    return CompletionRequest(prompt=prompt, seed=seed, tag=tag)


def generate_user_profile(
    user: str,
    category: SparsityCategory,
    graph: DynamicGraph,
    stream: ReviewStream,
    backend: Backend,
    templates: dict[str, PromptTemplate],
    *,
    seed: int = 0,
    limit: int = 5,
    until: Optional[int] = None,
    local_window: Optional[tuple[int, int]] = None,
    predefined: str = DEFAULT_PREDEFINED_PROFILE,
    report: Optional[RunReport] = None,
) -> Profile:
    """Category-specific user profile.

    Mid-tail: profile from the user's own sampled reviews. Long-tail:
    adds reviews by second-order neighbors, split into a local window
    (recent context) and the global history up to ``until``; the bounds
    apply to neighbor context only, the user's own sample is unbounded.
    Extreme: returns the predefined profile without any backend call.
    """
    if category is SparsityCategory.EXTREME:
        return Profile(
            entity_id=user,
            kind=KIND_USER,
            text=predefined,
            source=SOURCE_PREDEFINED,
        )
    if category is SparsityCategory.NORMAL:
        raise ValueError("normal users are not profiled for synthesis")

    own = select_reviews(
        user, KIND_USER, stream, limit, stable_seed(seed, "own", user)
    )
    own_block = format_reviews([e for _, e in own])
    if category is SparsityCategory.MID_TAIL:
        prompt = templates["user_mid_extreme"].render(reviews=own_block)
    else:  # LONG_TAIL
        neighbors = graph.second_order_neighbors(user, until)
        if not neighbors:
            raise InsufficientNeighbors(user)
        neighbor_events = [
            (i, e)
            for i, e in enumerate(stream.events)
            if e.user_id in neighbors and (until is None or e.timestamp <= until)
        ]
        if local_window is None:
            local_window = stream.require_span()
        lo, hi = local_window
        local = [(i, e) for i, e in neighbor_events if lo <= e.timestamp <= hi]
        local = _cap(local, limit, stable_seed(seed, "local", user))
        global_ = _cap(neighbor_events, limit, stable_seed(seed, "global", user))
        prompt = templates["user_long_tail"].render(
            reviews=own_block,
            local_reviews=format_reviews([e for _, e in local]),
            global_reviews=format_reviews([e for _, e in global_]),
        )
    text = complete(
        backend,
        _profile_request(prompt, stable_seed(seed, "user_profile", user), "user_profile"),
    ).strip()
    if report is not None:
        report.record_call("user_profile", prompt)
    return Profile(
        entity_id=user,
        kind=KIND_USER,
        text=text,
        supporting_reviews=tuple(i for i, _ in own),
    )


def generate_product_profile(
    product: str,
    graph: DynamicGraph,
    stream: ReviewStream,
    backend: Backend,
    templates: dict[str, PromptTemplate],
    *,
    seed: int = 0,
    limit: int = 5,
    until: Optional[int] = None,
    reviews: Optional[list[tuple[int, ReviewEvent]]] = None,
    report: Optional[RunReport] = None,
) -> Profile:
    """Product profile from its own (or substitute) sampled reviews."""
    sampled = reviews if reviews is not None else select_reviews(
        product, KIND_PRODUCT, stream, limit, stable_seed(seed, "prod", product), until
    )
    if not sampled:
        raise EmptyHistory(product)
    prompt = templates["product"].render(
        reviews=format_reviews([e for _, e in sampled])
    )
    text = complete(
        backend,
        _profile_request(
            prompt, stable_seed(seed, "product_profile", product), "product_profile"
        ),
    ).strip()
    if report is not None:
        report.record_call("product_profile", prompt)
    return Profile(
        entity_id=product,
        kind=KIND_PRODUCT,
        text=text,
        supporting_reviews=tuple(i for i, _ in sampled),
    )


def second_order_products(graph: DynamicGraph, user: str) -> set[str]:
    """Products reviewed by the user's second-order neighbors, minus the
    user's own products."""
    own = graph.neighbors(user)
    candidates: set[str] = set()
    for neighbor in graph.second_order_neighbors(user):
        candidates.update(graph.neighbors(neighbor))
    return candidates - own


def _parse_selection(text: str, valid: set[str]) -> list[str]:
    match = re.search(r"products?:\s*(.+)", text)
    if not match:
        return []
    chosen: list[str] = []
    for token in re.split(r"[,\s]+", match.group(1).strip()):
        if token in valid and token not in chosen:
            chosen.append(token)
    return chosen


def select_second_order_products(
    user: str,
    user_profile: Profile,
    graph: DynamicGraph,
    stream: ReviewStream,
    backend: Backend,
    templates: dict[str, PromptTemplate],
    k: int,
    *,
    seed: int = 0,
    limit: int = 5,
    candidate_limit: int = 10,
    report: Optional[RunReport] = None,
) -> list[Profile]:
    """Profile candidate second-order products and let the backend pick
    at most ``k``; unparseable selections fall back to top-k by review
    count (flagged in the run report)."""
    candidates = second_order_products(graph, user)
    if not candidates:
        raise NoCandidates(user)
    review_counts = {p: len(es) for p, es in stream.events_by_product().items()}
    ranked = sorted(candidates, key=lambda p: (-review_counts.get(p, 0), p))
    ranked = ranked[:candidate_limit]
    profiles = {
        pid: generate_product_profile(
            pid, graph, stream, backend, templates,
            seed=seed, limit=limit, report=report,
        )
        for pid in ranked
    }
    prompt = templates["second_order_select"].render(
        self_profile=user_profile.text,
        candidate_profiles=format_profiles([profiles[p] for p in ranked]),
    )
    output = complete(
        backend,
        _profile_request(prompt, stable_seed(seed, "select", user), "select_products"),
    )
    if report is not None:
        report.record_call("select_products", prompt)
    chosen = _parse_selection(output, set(ranked))[:k]
    if not chosen:
        chosen = ranked[:k]
        if report is not None:
            report.record_fallback(
                "selection", user, "unparseable selection; top-k by review count"
            )
    return [profiles[pid] for pid in chosen]


def high_rated_products(
    stream: ReviewStream, n: int, exclude: Optional[set[str]] = None
) -> list[str]:
    """Top products by (mean rating, review count); proxies for extreme
    users with no usable neighborhood."""
    exclude = exclude or set()
    stats: dict[str, tuple[float, int]] = {}
    for product, events in stream.events_by_product().items():
        if product in exclude:
            continue
        stats[product] = (sum(e.rating for e in events) / len(events), len(events))
    ranked = sorted(stats, key=lambda p: (-stats[p][0], -stats[p][1], p))
    return ranked[:n]


def _parse_rating_review(text: str) -> tuple[Optional[int], str]:
    rating_match = re.search(r"rating:\s*(-?\d+)", text)
    review_match = re.search(r"review:\s*(.+)", text, re.DOTALL)
    rating = int(rating_match.group(1)) if rating_match else None
    review = review_match.group(1).strip() if review_match else ""
    return rating, review


def synthesize_review(
    user_profile: Profile,
    product_profiles: list[Profile],
    slot: InterpolationSlot,
    backend: Backend,
    templates: dict[str, PromptTemplate],
    *,
    seed: int = 0,
    parse_retries: int = 2,
    report: Optional[RunReport] = None,
) -> ReviewEvent:
    """One pseudo-review for a timeline slot.

    The backend output must parse as a rating in 1..5 plus review text;
    the request is re-issued up to ``parse_retries`` times. The event is
    attributed to one of the supplied product profiles, rotated by the
    slot's interval index so consecutive slots spread across products.
    """
    if not product_profiles:
        raise ValueError("synthesize_review needs at least one product profile")
    prompt = templates["data_synth"].render(
        user_profile=user_profile.text,
        product_profiles=format_profiles(product_profiles),
    )
    attempts = 0
    last_rating: Optional[int] = None
    rating, review = None, ""
    for attempt in range(parse_retries + 1):
        attempts += 1
        output = complete(
            backend,
            CompletionRequest(
                prompt=prompt,
                seed=stable_seed(seed, "synth", slot.user_id, slot.interval, attempt),
                tag="synthesize",
            ),
        )
        rating, review = _parse_rating_review(output)
        if rating is not None and 1 <= rating <= 5 and review:
            break
        last_rating = rating
        rating = None
    if report is not None:
        report.record_call("synthesize", prompt, attempts)
    if rating is None:
        if last_rating is not None:
            raise RatingOutOfRange(last_rating)
        raise UnparseableOutput(attempts, "expected 'rating:' and 'review:' lines")
    product = product_profiles[slot.interval % len(product_profiles)]
    return ReviewEvent(
        user_id=slot.user_id,
        product_id=product.entity_id,
        timestamp=slot.timestamp,
        rating=rating,
        text=review,
        provenance=PROVENANCE_SYNTHESIZED,
        sparsity_category=slot.category,
    )
