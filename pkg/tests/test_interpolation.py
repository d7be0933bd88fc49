import random

import pytest

from streamaug.errors import MissingSynthesis
from streamaug.interpolation import (
    InterpolationConfig,
    find_slots,
    interpolate_dataset,
    interpolation_factor,
    plan_fills,
    slot_timestamp,
)
from streamaug.reviews import (
    PROVENANCE_SYNTHESIZED,
    ReviewEvent,
    SparsityCategory,
)
from streamaug.sparsity import ActivityFeatures, ActivitySeries, SparsityAssignment

from helpers import ev, stream_of

FEATURES = ActivityFeatures(0.0, 0.0, 0.0, 0.0)


def assign(user, category, review_count=3):
    return SparsityAssignment(user, category, FEATURES, 0, review_count)


def synth_for(slots):
    return [
        ReviewEvent(
            user_id=s.user_id,
            product_id="SYN",
            timestamp=s.timestamp,
            rating=4,
            text="made up",
            provenance=PROVENANCE_SYNTHESIZED,
            sparsity_category=s.category,
        )
        for s in slots
    ]


def test_interpolation_factor_values():
    assert interpolation_factor(ActivitySeries("u", (1, 0, 2, 0, 0, 0, 0, 1, 0, 0), 1)) == 0.7
    assert interpolation_factor(ActivitySeries("u", (1, 1, 1), 1)) == 0.0
    assert interpolation_factor(ActivitySeries("u", (0, 0), 1)) == 1.0


def pinned(*events):
    return stream_of(ev("lo", "pin", 0), ev("hi", "pin", 100), *events)


def test_find_slots_at_empty_interval_midpoints():
    # u active everywhere except intervals 2 and 7
    times = [5, 15, 35, 45, 55, 65, 85, 95]
    stream = pinned(*[ev("u", "p", t) for t in times])
    slots = find_slots(stream, [assign("u", SparsityCategory.LONG_TAIL)], 10)
    assert [(s.interval, s.timestamp) for s in slots] == [(2, 25), (7, 75)]
    assert all(s.category is SparsityCategory.LONG_TAIL for s in slots)


def test_normal_users_contribute_no_slots():
    stream = pinned(ev("u", "p", 5))
    assert find_slots(stream, [assign("u", SparsityCategory.NORMAL)], 10) == []


def test_slot_timestamp_is_interval_midpoint():
    assert slot_timestamp((0, 100), 0, 10) == 5
    assert slot_timestamp((0, 100), 9, 10) == 95


def test_ledger_totals_match_brute_force_double_sum():
    rng = random.Random(31)
    events = [ev("lo", "pin", 0), ev("hi", "pin", 1000)]
    categories = {}
    for i in range(12):
        user = f"u{i}"
        categories[user] = rng.choice(list(SparsityCategory))
        for _ in range(rng.randint(1, 6)):
            events.append(ev(user, "p", rng.randrange(1001)))
    stream = stream_of(*events)
    assignments = [assign(u, c) for u, c in sorted(categories.items())]
    T = 10
    slots = find_slots(stream, assignments, T)
    _, ledger = interpolate_dataset(stream, slots, synth_for(plan_fills(
        stream, slots, InterpolationConfig())), InterpolationConfig())

    # independent oracle: double sum of zero-interval indicators
    from streamaug.sparsity import activity_series

    expected: dict[str, int] = {}
    for user, category in categories.items():
        if category is SparsityCategory.NORMAL:
            continue
        zeros = activity_series(stream, user, T).counts.count(0)
        expected[category.value] = expected.get(category.value, 0) + zeros
    assert ledger.totals == expected
    for user, entry in ledger.per_user.items():
        assert entry["filled"] <= entry["found"]


def test_fills_up_to_min_interactions():
    # 4 originals in intervals 0-3, empty 4-9 (6 slots), threshold 10
    stream = pinned(*[ev("u", "p", t) for t in (5, 15, 25, 35)])
    slots = find_slots(stream, [assign("u", SparsityCategory.LONG_TAIL)], 10)
    assert len(slots) == 6
    augmented, ledger = interpolate_dataset(
        stream, slots, synth_for(slots), InterpolationConfig(min_interactions=10)
    )
    user_events = [e for e in augmented.events if e.user_id == "u"]
    assert len(user_events) == 10
    assert ledger.per_user["u"] == {
        "category": "long_tail", "found": 6, "filled": 6,
    }


def test_front_fraction_limits_eligible_intervals():
    stream = pinned(ev("u", "p", 95))
    slots = find_slots(stream, [assign("u", SparsityCategory.MID_TAIL)], 10)
    assert len(slots) == 9  # only interval 9 is occupied
    cfg = InterpolationConfig(front_fraction=0.4)
    planned = plan_fills(stream, slots, cfg)
    assert {s.interval for s in planned} == {0, 1, 2, 3}
    augmented, ledger = interpolate_dataset(stream, slots, synth_for(planned), cfg)
    assert ledger.filled == {"mid_tail": 4}
    assert ledger.totals == {"mid_tail": 9}


def test_user_at_threshold_gets_no_fills():
    times = [1, 2, 3, 4, 5, 6, 11, 12, 13, 14]
    stream = pinned(*[ev("u", "p", t) for t in times])
    slots = find_slots(stream, [assign("u", SparsityCategory.MID_TAIL)], 10)
    augmented, ledger = interpolate_dataset(
        stream, slots, [], InterpolationConfig(min_interactions=10)
    )
    assert ledger.filled == {}
    assert augmented.events == stream.events


def test_front_zero_leaves_stream_identical(tmp_path):
    from streamaug.reviews import dump_stream

    stream = pinned(*[ev("u", "p", t) for t in (5, 15)])
    slots = find_slots(stream, [assign("u", SparsityCategory.EXTREME)], 10)
    cfg = InterpolationConfig(front_fraction=0.0)
    augmented, ledger = interpolate_dataset(stream, slots, [], cfg)
    before, after = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    dump_stream(stream, before)
    dump_stream(augmented, after)
    assert before.read_bytes() == after.read_bytes()
    assert sum(ledger.filled.values()) == 0


def test_originals_kept_verbatim_in_order():
    stream = pinned(
        ev("a", "p", 5, 4, "one"), ev("b", "p", 5, 2, "two"), ev("a", "p", 45, 3, "x")
    )
    slots = find_slots(stream, [assign("a", SparsityCategory.LONG_TAIL, 2)], 10)
    augmented, _ = interpolate_dataset(
        stream, slots, synth_for(plan_fills(stream, slots, InterpolationConfig())),
        InterpolationConfig(),
    )
    originals = [e for e in augmented.events if not e.is_synthesized]
    assert originals == stream.events
    times = [e.timestamp for e in augmented.events]
    assert times == sorted(times)


def test_missing_synthesis_raises():
    stream = pinned(ev("u", "p", 5))
    slots = find_slots(stream, [assign("u", SparsityCategory.LONG_TAIL, 1)], 10)
    with pytest.raises(MissingSynthesis):
        interpolate_dataset(stream, slots, [], InterpolationConfig())


def test_unmatched_synthesized_event_rejected():
    stream = pinned(ev("u", "p", 5))
    slots = find_slots(stream, [assign("u", SparsityCategory.LONG_TAIL, 1)], 10)
    rogue = ReviewEvent(
        "u", "SYN", 9999, 4, "rogue", provenance=PROVENANCE_SYNTHESIZED,
        sparsity_category=SparsityCategory.LONG_TAIL,
    )
    with pytest.raises(ValueError):
        interpolate_dataset(stream, slots, [rogue], InterpolationConfig())
