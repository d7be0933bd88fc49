import pytest

from streamaug.errors import (
    EmptyHistory,
    InsufficientNeighbors,
    NoCandidates,
    RatingOutOfRange,
    ServerError,
    UnparseableOutput,
)
from streamaug.graph import DynamicGraph
from streamaug.interpolation import InterpolationSlot, find_slots
from streamaug.llm import MockBackend
from streamaug.pipeline import PipelineConfig, synthesize_events
from streamaug.reviews import SparsityCategory
from streamaug.sparsity import categorize_users
from streamaug.synthesis import (
    Profile,
    RunReport,
    generate_product_profile,
    generate_user_profile,
    second_order_products,
    select_reviews,
    select_second_order_products,
    synthesize_review,
)

from helpers import DAY, T0, ev, stream_of


class SpyBackend:
    """Wraps another backend, recording every request."""

    def __init__(self, inner=None):
        self.inner = inner or MockBackend()
        self.name = "spy"
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return self.inner.complete(request)


class ScriptedBackend:
    """Plays back canned outputs; repeats the last one when exhausted."""

    name = "scripted"

    def __init__(self, outputs):
        self.outputs = list(outputs)
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        if len(self.outputs) > 1:
            return self.outputs.pop(0)
        return self.outputs[0]


class FailingBackend:
    name = "failing"

    def complete(self, request):
        raise ServerError("boom")


def sample_slot(user="u", interval=2, timestamp=T0 + 5 * DAY,
                category=SparsityCategory.MID_TAIL):
    return InterpolationSlot(user, interval, timestamp, category)


def simple_stream():
    return stream_of(
        ev("u", "p1", T0 + 1, 4, "first"),
        ev("u", "p1", T0 + 2, 5, "second"),
        ev("u", "p2", T0 + 3, 3, "third"),
        ev("w", "p9", T0 + 9, 2, "other user"),
    )


def test_select_reviews_returns_all_when_under_limit():
    stream = simple_stream()
    picked = select_reviews("u", "user", stream, limit=5, seed=0)
    assert [e.text for _, e in picked] == ["first", "second", "third"]


def test_select_reviews_deterministic_sample():
    events = [ev("u", f"p{i}", T0 + i, 4, f"t{i}") for i in range(100)]
    stream = stream_of(*events)
    first = select_reviews("u", "user", stream, limit=5, seed=42)
    second = select_reviews("u", "user", stream, limit=5, seed=42)
    assert first == second
    assert len(first) == 5
    # chronological order preserved by the sorted sample
    times = [e.timestamp for _, e in first]
    assert times == sorted(times)


def test_select_reviews_empty_history():
    with pytest.raises(EmptyHistory):
        select_reviews("ghost", "user", simple_stream(), limit=3, seed=0)


def test_mid_tail_profile_carries_supporting_ids(templates):
    stream = simple_stream()
    graph = DynamicGraph.from_stream(stream)
    backend = SpyBackend()
    profile = generate_user_profile(
        "u", SparsityCategory.MID_TAIL, graph, stream, backend, templates,
        seed=1,
    )
    assert profile.source == "generated"
    assert profile.text
    sampled = {i for i, e in enumerate(stream.events) if e.user_id == "u"}
    assert set(profile.supporting_reviews) == sampled
    assert len(backend.requests) == 1


def test_extreme_profile_makes_zero_backend_calls(templates):
    stream = simple_stream()
    graph = DynamicGraph.from_stream(stream)
    backend = SpyBackend()
    profile = generate_user_profile(
        "u", SparsityCategory.EXTREME, graph, stream, backend, templates,
        predefined="a default persona",
    )
    assert profile.source == "predefined"
    assert profile.text == "a default persona"
    assert backend.requests == []


def test_long_tail_prompt_contains_local_and_global_blocks(templates):
    events = [ev("u", "share", T0 + 10 * DAY, 4, "mine")]
    texts = {}
    for i in range(5):
        t = T0 + (2 if i < 2 else 30 + i) * DAY
        texts[f"n{i}"] = f"neighbor text {i}"
        events.append(ev(f"n{i}", "share", t, 5, texts[f"n{i}"]))
    events.append(ev("pin", "far", T0 + 60 * DAY, 3, "pin"))
    stream = stream_of(*events)
    graph = DynamicGraph.from_stream(stream)
    backend = SpyBackend()
    # local window covers only the two early neighbors
    profile = generate_user_profile(
        "u", SparsityCategory.LONG_TAIL, graph, stream, backend, templates,
        seed=3,
        until=T0 + 59 * DAY,
        local_window=(T0, T0 + 3 * DAY),
    )
    assert profile.text
    prompt = backend.requests[0].prompt
    local_block = prompt.split("Recent reviews from overlapping shoppers:")[1]
    local_part, global_part = local_block.split(
        "Full history of reviews from overlapping shoppers:"
    )
    assert texts["n0"] in local_part and texts["n1"] in local_part
    assert texts["n4"] not in local_part
    for i in range(5):
        assert texts[f"n{i}"] in global_part


def test_long_tail_without_neighbors_raises(templates):
    stream = stream_of(ev("u", "alone", T0, 4, "mine"), ev("pin", "x", T0 + DAY))
    graph = DynamicGraph.from_stream(stream)
    with pytest.raises(InsufficientNeighbors):
        generate_user_profile(
            "u", SparsityCategory.LONG_TAIL, graph, stream, MockBackend(), templates
        )


def test_product_profile_from_sampled_reviews(templates):
    events = [ev(f"u{i}", "prod", T0 + i, 4, f"review {i}") for i in range(4)]
    stream = stream_of(*events)
    graph = DynamicGraph.from_stream(stream)
    backend = SpyBackend()
    profile = generate_product_profile(
        "prod", graph, stream, backend, templates, seed=0, limit=5
    )
    assert profile.kind == "product"
    assert len(profile.supporting_reviews) == 4


def test_product_profile_accepts_substitute_reviews(templates):
    stream = simple_stream()
    graph = DynamicGraph.from_stream(stream)
    substitutes = select_reviews("p1", "product", stream, limit=5, seed=0)
    backend = SpyBackend()
    profile = generate_product_profile(
        "unreviewed", graph, stream, backend, templates, reviews=substitutes
    )
    assert profile.entity_id == "unreviewed"
    assert "first" in backend.requests[0].prompt


def test_backend_failure_propagates_without_partial_profile(templates):
    stream = simple_stream()
    graph = DynamicGraph.from_stream(stream)
    with pytest.raises(ServerError):
        generate_product_profile(
            "p1", graph, stream, FailingBackend(), templates
        )


def selection_fixture():
    # u1 reviewed p1; u2 shares p1 and also reviewed p2 and p3
    events = [
        ev("u1", "p1", T0 + 1, 4, "u1 p1"),
        ev("u2", "p1", T0 + 2, 5, "u2 p1"),
        ev("u2", "p2", T0 + 3, 5, "u2 p2"),
        ev("u2", "p3", T0 + 4, 2, "u2 p3"),
        ev("u3", "p2", T0 + 5, 4, "u3 p2"),
    ]
    stream = stream_of(*events)
    return stream, DynamicGraph.from_stream(stream)


def test_selection_excludes_own_products(templates):
    stream, graph = selection_fixture()
    assert second_order_products(graph, "u1") == {"p2", "p3"}
    user_profile = Profile("u1", "user", "likes things")
    chosen = select_second_order_products(
        "u1", user_profile, graph, stream, MockBackend(), templates, k=1, seed=0
    )
    assert len(chosen) == 1
    assert chosen[0].entity_id in {"p2", "p3"}


def test_selection_no_candidates():
    stream = stream_of(ev("u1", "p1", T0, 4, "alone"), ev("pin", "x", T0 + 1))
    graph = DynamicGraph.from_stream(stream)
    with pytest.raises(NoCandidates):
        select_second_order_products(
            "u1", Profile("u1", "user", "t"), graph, stream, MockBackend(),
            load_templates_cached(), k=1,
        )


def load_templates_cached():
    from streamaug.templates import load_templates

    return load_templates()


def test_garbage_selection_falls_back_to_top_k(templates):
    stream, graph = selection_fixture()
    outputs = ["profile text"] * 2 + ["complete nonsense"]
    backend = ScriptedBackend(outputs)
    report = RunReport(backend="scripted")
    chosen = select_second_order_products(
        "u1", Profile("u1", "user", "t"), graph, stream, backend, templates,
        k=2, seed=0, report=report,
    )
    # top-k by review count: p2 (2 reviews) then p3 (1 review)
    assert [p.entity_id for p in chosen] == ["p2", "p3"]
    assert report.fallbacks and report.fallbacks[0]["kind"] == "selection"


def test_synthesize_review_schema(templates):
    user_profile = Profile("u", "user", "a steady reviewer")
    products = [Profile("pX", "product", "a gadget")]
    event = synthesize_review(
        user_profile, products, sample_slot(), MockBackend(), templates, seed=5
    )
    assert event.rating in (1, 2, 3, 4, 5)
    assert event.text
    assert event.is_synthesized
    assert event.product_id == "pX"
    assert event.timestamp == sample_slot().timestamp
    assert event.sparsity_category is SparsityCategory.MID_TAIL


def test_synthesize_review_retries_bad_rating(templates):
    backend = ScriptedBackend(
        ["rating: 9\nreview: nope", "rating: 9\nreview: still nope",
         "rating: 4\nreview: finally fine"]
    )
    report = RunReport(backend="scripted")
    event = synthesize_review(
        Profile("u", "user", "t"), [Profile("p", "product", "t")],
        sample_slot(), backend, templates, parse_retries=2, report=report,
    )
    assert event.rating == 4
    assert backend.calls == 3
    assert report.calls[-1]["attempts"] == 3


def test_synthesize_review_exhausted_rating_error(templates):
    backend = ScriptedBackend(["rating: 9\nreview: nope"])
    with pytest.raises(RatingOutOfRange):
        synthesize_review(
            Profile("u", "user", "t"), [Profile("p", "product", "t")],
            sample_slot(), backend, templates, parse_retries=1,
        )


def test_synthesize_review_unparseable_error(templates):
    backend = ScriptedBackend(["no structure at all"])
    with pytest.raises(UnparseableOutput):
        synthesize_review(
            Profile("u", "user", "t"), [Profile("p", "product", "t")],
            sample_slot(), backend, templates, parse_retries=1,
        )


def test_mock_synthesis_is_pure_function_of_inputs(templates):
    args = (
        Profile("u", "user", "a steady reviewer"),
        [Profile("pX", "product", "a gadget")],
        sample_slot(),
        MockBackend(),
        templates,
    )
    first = synthesize_review(*args, seed=9)
    second = synthesize_review(*args, seed=9)
    assert first == second


def composition_fixture():
    events = []
    for i in range(6):  # mid-tail burst: 6 reviews over two products
        events.append(ev("M", "A" if i % 2 else "B", T0 + 50 * DAY + i, 4, f"m{i}"))
    for i in range(6):  # steady non-sparse counterpart
        events.append(ev("S", f"F{i}", T0 + i * 15 * DAY, 4, f"s{i}"))
    events += [
        ev("V", "A", T0 + 10 * DAY, 5, "v a"),
        ev("V", "C", T0 + 11 * DAY, 5, "v c"),
        ev("V", "D", T0 + 12 * DAY, 4, "v d"),
        ev("pin", "Z", T0, 3, "start"),
        ev("pin", "Z", T0 + 100 * DAY, 3, "end"),
    ]
    return stream_of(*events)


def test_full_mid_tail_pipeline_composition_order(templates):
    stream = composition_fixture()
    graph = DynamicGraph.from_stream(stream)
    assignments = categorize_users(stream, graph)
    by_user = {a.user_id: a for a in assignments}
    assert by_user["M"].category is SparsityCategory.MID_TAIL
    slots = [
        s for s in find_slots(stream, assignments, 10) if s.user_id == "M"
    ]
    assert slots, "mid-tail user must have empty intervals"
    report = RunReport(backend="mock")
    cfg = PipelineConfig(seed=7)
    synthesized = synthesize_events(
        stream, graph, assignments, slots, MockBackend(), templates, cfg, report
    )
    tags = [c["tag"] for c in report.calls]
    assert tags[0] == "user_profile"
    select_at = tags.index("select_products")
    assert set(tags[1:select_at]) == {"product_profile"}
    assert set(tags[select_at + 1:]) == {"synthesize"}
    assert len(tags[select_at + 1:]) == len(synthesized)
    # synthesized events only name products the pipeline selected for M
    assert {e.product_id for e in synthesized} <= {"C", "D"}
    for event, slot in zip(synthesized, slots):
        assert event.timestamp == slot.timestamp
        assert event.rating in (1, 2, 3, 4, 5)
