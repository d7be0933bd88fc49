"""End-to-end orchestration: ingest -> categorize -> synthesize ->
interpolate -> evaluate, with every tunable gathered in PipelineConfig.

All randomness flows from the single top-level seed; with the mock
backend a run is reproducible byte-for-byte.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .baseline import prequential_eval
from .errors import (
    InsufficientNeighbors,
    NoCandidates,
    PipelineError,
    StreamaugError,
)
from .graph import DynamicGraph
from .interpolation import (
    InterpolationConfig,
    InterpolationLedger,
    InterpolationSlot,
    find_slots,
    interpolate_dataset,
    plan_fills,
)
from .llm import Backend, BackendConfig, make_backend, stable_seed
from .metrics import metrics_report, rmse_reduction
from .reviews import (
    ReviewEvent,
    ReviewStream,
    SparsityCategory,
    dump_stream,
    load_dataset,
    split_train_test,
)
from .sparsity import SparsityAssignment, SparsityConfig, categorize_users
from .synthesis import (
    DEFAULT_PREDEFINED_PROFILE,
    Profile,
    RunReport,
    SynthesisConfig,
    generate_product_profile,
    generate_user_profile,
    high_rated_products,
    select_second_order_products,
    synthesize_review,
)
from .templates import load_templates

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    input: str = ""
    output_dir: str = "out"
    interval_count: int = 10
    sparse_threshold: int = 5
    second_order_threshold: int = 5
    min_interactions: int = 10
    front_fraction: float = 1.0
    seed: int = 0
    strict: bool = True
    split_ratio: float = 0.9
    template_dir: Optional[str] = None
    review_sample_limit: int = 5
    candidate_limit: int = 10
    select_k: int = 3
    parse_retries: int = 2
    high_rated_count: int = 3
    predefined_profile: str = DEFAULT_PREDEFINED_PROFILE
    judge_limit: int = 25
    backend: BackendConfig = field(default_factory=BackendConfig)

    def __post_init__(self):
        for name in (
            "interval_count",
            "sparse_threshold",
            "second_order_threshold",
            "min_interactions",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.front_fraction <= 1.0:
            raise ValueError("front_fraction must lie in [0, 1]")
        if not 0.0 <= self.split_ratio < 1.0:
            raise ValueError("split_ratio must lie in [0, 1); 0 disables the split")

    def sparsity(self) -> SparsityConfig:
        return SparsityConfig(
            sparse_threshold=self.sparse_threshold,
            second_order_threshold=self.second_order_threshold,
            seed=self.seed,
        )

    def interpolation(self) -> InterpolationConfig:
        return InterpolationConfig(
            min_interactions=self.min_interactions,
            front_fraction=self.front_fraction,
        )

    def synthesis(self) -> SynthesisConfig:
        return SynthesisConfig(
            review_sample_limit=self.review_sample_limit,
            candidate_limit=self.candidate_limit,
            select_k=self.select_k,
            parse_retries=self.parse_retries,
            high_rated_count=self.high_rated_count,
            predefined_profile=self.predefined_profile,
        )


def run_stage(name: str, fn):
    """Run one stage, tagging any failure with the stage name."""
    try:
        return fn()
    except PipelineError:
        raise
    except (StreamaugError, OSError, ValueError) as exc:
        raise PipelineError(name, exc) from exc


def load_config_file(path: str | Path) -> dict:
    """Parse a plain ``key = value`` config file (# starts a comment)."""
    values: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def write_categorization_csv(
    assignments: list[SparsityAssignment], path: str | Path
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "user_id",
                "category",
                "review_count",
                "second_order_count",
                "mean",
                "std",
                "min",
                "max",
            ]
        )
        for a in assignments:
            writer.writerow(
                [
                    a.user_id,
                    a.category.value,
                    a.review_count,
                    a.second_order_count,
                    f"{a.features.mean:.6f}",
                    f"{a.features.std_dev:.6f}",
                    f"{a.features.min:.6f}",
                    f"{a.features.max:.6f}",
                ]
            )


def _interval_bounds(
    span: tuple[int, int], interval: int, n_intervals: int
) -> tuple[int, int]:
    t0, tn = span
    width = tn - t0
    lo = t0 + (interval * width) // n_intervals
    hi = t0 + ((interval + 1) * width) // n_intervals
    return lo, hi


def synthesize_events(
    stream: ReviewStream,
    graph: DynamicGraph,
    assignments: list[SparsityAssignment],
    slots: list[InterpolationSlot],
    backend: Backend,
    templates,
    cfg: PipelineConfig,
    report: RunReport,
) -> list[ReviewEvent]:
    """One synthesized event per planned slot.

    Per user the call order is: user profile, candidate product
    profiles, product selection, then one synthesis call per slot.
    """
    syn = cfg.synthesis()
    planned = plan_fills(stream, slots, cfg.interpolation())
    by_user: dict[str, list[InterpolationSlot]] = {}
    for slot in planned:
        by_user.setdefault(slot.user_id, []).append(slot)

    span = stream.require_span()
    events: list[ReviewEvent] = []
    for user in sorted(by_user):
        user_slots = sorted(by_user[user], key=lambda s: s.interval)
        category = user_slots[0].category
        first = user_slots[0]
        user_seed = stable_seed(cfg.seed, "user", user)
        local_window = _interval_bounds(span, first.interval, stream.interval_count)

        try:
            profile = generate_user_profile(
                user,
                category,
                graph,
                stream,
                backend,
                templates,
                seed=user_seed,
                limit=syn.review_sample_limit,
                until=first.timestamp,
                local_window=local_window,
                predefined=syn.predefined_profile,
                report=report,
            )
        except InsufficientNeighbors:
            # long-tail user with no neighbors before its first slot:
            # profile from own history alone
            report.record_fallback(
                "user_profile", user, "no second-order neighbors before first slot"
            )
            profile = generate_user_profile(
                user,
                SparsityCategory.MID_TAIL,
                graph,
                stream,
                backend,
                templates,
                seed=user_seed,
                limit=syn.review_sample_limit,
                predefined=syn.predefined_profile,
                report=report,
            )

        products = _product_set(
            user, category, profile, graph, stream, backend, templates, syn,
            user_seed, report,
        )
        for slot in user_slots:
            events.append(
                synthesize_review(
                    profile,
                    products,
                    slot,
                    backend,
                    templates,
                    seed=user_seed,
                    parse_retries=syn.parse_retries,
                    report=report,
                )
            )
    return events


def _product_set(
    user: str,
    category: SparsityCategory,
    profile: Profile,
    graph: DynamicGraph,
    stream: ReviewStream,
    backend: Backend,
    templates,
    syn: SynthesisConfig,
    user_seed: int,
    report: RunReport,
) -> list[Profile]:
    if category is SparsityCategory.EXTREME:
        proxies = high_rated_products(stream, syn.high_rated_count)
        return [
            generate_product_profile(
                pid, graph, stream, backend, templates,
                seed=user_seed, limit=syn.review_sample_limit, report=report,
            )
            for pid in proxies
        ]
    try:
        return select_second_order_products(
            user,
            profile,
            graph,
            stream,
            backend,
            templates,
            syn.select_k,
            seed=user_seed,
            limit=syn.review_sample_limit,
            candidate_limit=syn.candidate_limit,
            report=report,
        )
    except NoCandidates:
        report.record_fallback(
            "product_set", user, "no second-order products; using own products"
        )
        own = sorted(graph.neighbors(user))[: syn.select_k]
        return [
            generate_product_profile(
                pid, graph, stream, backend, templates,
                seed=user_seed, limit=syn.review_sample_limit, report=report,
            )
            for pid in own
        ]


@dataclass
class PipelineResult:
    stream: ReviewStream
    assignments: list[SparsityAssignment]
    augmented: ReviewStream
    ledger: InterpolationLedger
    report: RunReport
    metrics: dict
    artifacts: dict[str, Path]


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Run every stage and write the artifact set into the output dir.

    Artifacts: categorization.csv, run_report.json, augmented.jsonl,
    ledger.json, metrics.json.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage = run_stage

    stream = stage(
        "ingest",
        lambda: load_dataset(
            cfg.input, strict=cfg.strict, interval_count=cfg.interval_count
        ),
    )
    graph = stage("ingest", lambda: DynamicGraph.from_stream(stream))

    assignments = stage(
        "categorize", lambda: categorize_users(stream, graph, cfg.sparsity())
    )
    categorization_path = out / "categorization.csv"
    write_categorization_csv(assignments, categorization_path)

    templates = stage("synthesize", lambda: load_templates(cfg.template_dir))
    backend = stage("synthesize", lambda: make_backend(cfg.backend))
    report = RunReport(backend=backend.name)
    slots = stage(
        "synthesize", lambda: find_slots(stream, assignments, cfg.interval_count)
    )
    synthesized = stage(
        "synthesize",
        lambda: synthesize_events(
            stream, graph, assignments, slots, backend, templates, cfg, report
        ),
    )
    report_path = out / "run_report.json"
    report.write(report_path)

    augmented, ledger = stage(
        "interpolate",
        lambda: interpolate_dataset(stream, slots, synthesized, cfg.interpolation()),
    )
    augmented_path = out / "augmented.jsonl"
    dump_stream(augmented, augmented_path)
    ledger_path = out / "ledger.json"
    with open(ledger_path, "w", encoding="utf-8") as fh:
        json.dump(ledger.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    metrics = stage(
        "evaluate",
        lambda: evaluate_streams(stream, augmented, cfg.split_ratio),
    )
    metrics_path = out / "metrics.json"
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")

    logger.info(
        "pipeline done: %d original + %d synthesized events",
        len(stream),
        len(augmented) - len(stream),
    )
    return PipelineResult(
        stream=stream,
        assignments=assignments,
        augmented=augmented,
        ledger=ledger,
        report=report,
        metrics=metrics,
        artifacts={
            "categorization": categorization_path,
            "run_report": report_path,
            "augmented": augmented_path,
            "ledger": ledger_path,
            "metrics": metrics_path,
        },
    )


def evaluate_streams(
    raw: ReviewStream,
    augmented: ReviewStream,
    split_ratio: float | None = None,
) -> dict:
    """Prequential metrics over the raw and augmented streams.

    Original events are scored in both runs; synthesized events only
    feed the predictor's history, so both reports share one gold set.
    With ``split_ratio`` set, scoring is restricted to the chronological
    test tail of the raw stream (state still warms up on everything).
    """
    score_from = None
    if split_ratio:
        _, test = split_train_test(raw, split_ratio)
        if test.events:
            score_from = test.events[0].timestamp
    raw_pred, raw_gold = prequential_eval(raw, score_from=score_from)
    aug_pred, aug_gold = prequential_eval(augmented, score_from=score_from)
    raw_report = metrics_report(raw_pred, raw_gold)
    aug_report = metrics_report(aug_pred, aug_gold)
    return {
        "raw": raw_report.to_dict(),
        "augmented": aug_report.to_dict(),
        "rmse_reduction_pct": (
            rmse_reduction(raw_report.rmse, aug_report.rmse)
            if raw_report.rmse > 0
            else 0.0
        ),
    }
