"""Command-line front end.

Subcommands: ingest, categorize, synthesize, interpolate, evaluate,
report, pipeline. Options may also come from a plain ``key = value``
config file; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .baseline import prequential_eval
from .errors import EmptyStreamError, PipelineError, StreamaugError
from .graph import DynamicGraph
from .interpolation import find_slots, interpolate_dataset
from .llm import BackendConfig, make_backend
from .metrics import metrics_report
from .pipeline import (
    PipelineConfig,
    evaluate_streams,
    load_config_file,
    run_pipeline,
    run_stage,
    synthesize_events,
    write_categorization_csv,
)
from .report import write_report
from .reviews import ReviewStream, dump_stream, load_dataset, split_train_test
from .sparsity import categorize_users
from .synthesis import RunReport
from .templates import load_templates
from . import plots

FRONT_CHOICES = (0, 20, 40, 60, 80, 100)

_CONFIG_FIELD_TYPES = {
    "input": str,
    "output_dir": str,
    "interval_count": int,
    "sparse_threshold": int,
    "second_order_threshold": int,
    "min_interactions": int,
    "front_fraction": float,
    "seed": int,
    "strict": lambda v: v.lower() in ("1", "true", "yes"),
    "split_ratio": float,
    "template_dir": str,
    "review_sample_limit": int,
    "candidate_limit": int,
    "select_k": int,
    "parse_retries": int,
    "high_rated_count": int,
    "predefined_profile": str,
    "judge_limit": int,
}

_BACKEND_FIELD_TYPES = {
    "backend_kind": ("kind", str),
    "backend_endpoint": ("endpoint", str),
    "backend_model": ("model", str),
    "backend_api_key_env": ("api_key_env", str),
    "backend_max_attempts": ("max_attempts", int),
    "backend_base_delay": ("base_delay", float),
    "backend_multiplier": ("multiplier", float),
    "backend_timeout": ("timeout", float),
}


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Merge defaults <- config file <- explicit flags."""
    values: dict = {}
    backend_values: dict = {}
    if getattr(args, "config", None):
        for key, raw in load_config_file(args.config).items():
            if key in _CONFIG_FIELD_TYPES:
                values[key] = _CONFIG_FIELD_TYPES[key](raw)
            elif key in _BACKEND_FIELD_TYPES:
                name, cast = _BACKEND_FIELD_TYPES[key]
                backend_values[name] = cast(raw)
            elif key == "front":
                values["front_fraction"] = int(raw) / 100.0
            else:
                raise ValueError(f"unknown config key {key!r}")

    for field_ in fields(PipelineConfig):
        flag_value = getattr(args, field_.name, None)
        if flag_value is not None and field_.name != "backend":
            values[field_.name] = flag_value
    if getattr(args, "front", None) is not None:
        values["front_fraction"] = args.front / 100.0
    if getattr(args, "lenient", False):
        values["strict"] = False
    for flag, (name, _) in _BACKEND_FIELD_TYPES.items():
        flag_value = getattr(args, flag, None)
        if flag_value is not None:
            backend_values[name] = flag_value

    if getattr(args, "input", None) is not None:
        values["input"] = args.input
    if getattr(args, "output_dir", None) is not None:
        values["output_dir"] = args.output_dir
    values["backend"] = BackendConfig(**backend_values)
    return PipelineConfig(**values)


def add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--seed", type=int, help="top-level seed (default 0)")
    parser.add_argument("--interval-count", dest="interval_count", type=int,
                        help="timeline intervals T (default 10)")
    parser.add_argument("--sparse-threshold", dest="sparse_threshold", type=int)
    parser.add_argument("--second-order-threshold", dest="second_order_threshold",
                        type=int)
    parser.add_argument("--min-interactions", dest="min_interactions", type=int)
    parser.add_argument("--front", type=int, choices=FRONT_CHOICES,
                        help="restrict fills to the front k%% of the timeline")
    parser.add_argument("--template-dir", dest="template_dir")
    parser.add_argument("--lenient", action="store_true",
                        help="skip malformed input lines instead of aborting")
    parser.add_argument("--backend-kind", dest="backend_kind",
                        choices=("mock", "http"))
    parser.add_argument("--backend-endpoint", dest="backend_endpoint")
    parser.add_argument("--backend-model", dest="backend_model")
    parser.add_argument("--backend-api-key-env", dest="backend_api_key_env",
                        help="environment variable holding the API key")
    parser.add_argument("--split-ratio", dest="split_ratio", type=float,
                        help="score only the chronological test tail "
                        "(default 0.9; 0 scores everything)")
    parser.add_argument("--judge-limit", dest="judge_limit", type=int)
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamaug",
        description="Categorize sparse reviewers, synthesize pseudo-reviews, "
        "and interpolate them into a streaming review dataset.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_, handler, needs_input=True):
        p = sub.add_parser(name, help=help_)
        if needs_input:
            p.add_argument("input", help="newline-delimited review records")
        p.add_argument("-o", "--output-dir", dest="output_dir",
                       help="artifact directory (default ./out)")
        add_common_options(p)
        p.set_defaults(func=handler)
        return p

    command("ingest", "validate and canonicalize a review file", cmd_ingest)
    p = command("categorize", "assign sparsity categories", cmd_categorize)
    p.add_argument("--edge-list", action="store_true",
                   help="also dump the interaction graph as edges.csv")
    command("synthesize", "generate pseudo-reviews for planned slots", cmd_synthesize)
    p = command("interpolate", "merge synthesized events into the stream",
                cmd_interpolate)
    p.add_argument("--synthesized", help="reuse events from a prior synthesize run")
    p = command("evaluate", "prequential metrics for raw vs augmented streams",
                cmd_evaluate)
    p.add_argument("--augmented", help="augmented stream to compare against")
    p = command("report", "richness/judge tables and figures for an augmented "
                "stream", cmd_report)
    p.add_argument("--categories", help="categorization.csv for the scatter figure")
    command("pipeline", "run every stage end to end", cmd_pipeline)
    return parser


def _load_stream(cfg: PipelineConfig, path: str | None = None) -> ReviewStream:
    return run_stage(
        "ingest",
        lambda: load_dataset(
            path or cfg.input, strict=cfg.strict, interval_count=cfg.interval_count
        ),
    )


def _out_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(args) -> int:
    cfg = build_config(args)
    stream = _load_stream(cfg)
    out = _out_dir(cfg)
    path = out / "stream.jsonl"
    dump_stream(stream, path)
    t0, tn = stream.require_span()
    print(f"events: {len(stream)}")
    print(f"users: {len(stream.users())}  products: {len(stream.products())}")
    print(f"span: [{t0}, {tn}]")
    print(f"wrote {path}")
    return 0


def cmd_categorize(args) -> int:
    cfg = build_config(args)
    stream = _load_stream(cfg)
    graph = DynamicGraph.from_stream(stream)
    assignments = categorize_users(stream, graph, cfg.sparsity())
    out = _out_dir(cfg)
    csv_path = out / "categorization.csv"
    write_categorization_csv(assignments, csv_path)
    rows = [
        {
            "category": a.category.value,
            "mean": a.features.mean,
            "std": a.features.std_dev,
        }
        for a in assignments
    ]
    plots.save_categorization_scatter(rows, out / "categorization.png")
    if args.edge_list:
        graph.write_edge_list(out / "edges.csv")
    tally: dict[str, int] = {}
    for a in assignments:
        tally[a.category.value] = tally.get(a.category.value, 0) + 1
    for category in sorted(tally):
        print(f"{category}: {tally[category]}")
    print(f"wrote {csv_path}")
    return 0


def _synthesis_inputs(cfg: PipelineConfig):
    stream = _load_stream(cfg)
    graph = DynamicGraph.from_stream(stream)
    assignments = categorize_users(stream, graph, cfg.sparsity())
    slots = find_slots(stream, assignments, cfg.interval_count)
    templates = load_templates(cfg.template_dir)
    backend = make_backend(cfg.backend)
    return stream, graph, assignments, slots, templates, backend


def cmd_synthesize(args) -> int:
    cfg = build_config(args)
    stream, graph, assignments, slots, templates, backend = _synthesis_inputs(cfg)
    report = RunReport(backend=backend.name)
    events = synthesize_events(
        stream, graph, assignments, slots, backend, templates, cfg, report
    )
    out = _out_dir(cfg)
    synth_path = out / "synthesized.jsonl"
    dump_stream(ReviewStream.from_events(events, cfg.interval_count), synth_path)
    report.write(out / "run_report.json")
    print(f"synthesized {len(events)} events -> {synth_path}")
    return 0


def cmd_interpolate(args) -> int:
    cfg = build_config(args)
    stream, graph, assignments, slots, templates, backend = _synthesis_inputs(cfg)
    report = RunReport(backend=backend.name)
    if args.synthesized:
        try:
            synthesized = list(_load_stream(cfg, args.synthesized).events)
        except PipelineError as exc:
            if not isinstance(exc.cause, EmptyStreamError):
                raise
            synthesized = []  # a front-0 synthesize run produces no events
    else:
        synthesized = synthesize_events(
            stream, graph, assignments, slots, backend, templates, cfg, report
        )
    augmented, ledger = interpolate_dataset(
        stream, slots, synthesized, cfg.interpolation()
    )
    out = _out_dir(cfg)
    dump_stream(augmented, out / "augmented.jsonl")
    with open(out / "ledger.json", "w", encoding="utf-8") as fh:
        json.dump(ledger.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    report.write(out / "run_report.json")
    filled = sum(ledger.filled.values())
    print(f"filled {filled} of {sum(ledger.totals.values())} slots")
    print(f"wrote {out / 'augmented.jsonl'}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = build_config(args)
    raw = _load_stream(cfg)
    out = _out_dir(cfg)
    if args.augmented:
        augmented = _load_stream(cfg, args.augmented)
        metrics = evaluate_streams(raw, augmented, cfg.split_ratio)
    else:
        score_from = None
        if cfg.split_ratio:
            _, test = split_train_test(raw, cfg.split_ratio)
            score_from = test.events[0].timestamp if test.events else None
        predicted, gold = prequential_eval(raw, score_from=score_from)
        metrics = {"raw": metrics_report(predicted, gold).to_dict()}
    path = out / "metrics.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(metrics, indent=2, sort_keys=True))
    print(f"wrote {path}")
    return 0


def cmd_report(args) -> int:
    cfg = build_config(args)
    stream = _load_stream(cfg)
    backend = make_backend(cfg.backend)
    templates = load_templates(cfg.template_dir)
    rows = None
    if args.categories:
        with open(args.categories, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    artifacts = write_report(
        stream,
        backend,
        templates["judge"],
        _out_dir(cfg),
        seed=cfg.seed,
        judge_limit=cfg.judge_limit,
        categorization_rows=rows,
    )
    for name in sorted(artifacts):
        print(f"wrote {artifacts[name]}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = build_config(args)
    result = run_pipeline(cfg)
    templates = load_templates(cfg.template_dir)
    backend = make_backend(cfg.backend)
    rows = [
        {
            "category": a.category.value,
            "mean": a.features.mean,
            "std": a.features.std_dev,
        }
        for a in result.assignments
    ]
    report_artifacts = write_report(
        result.augmented,
        backend,
        templates["judge"],
        cfg.output_dir,
        seed=cfg.seed,
        judge_limit=cfg.judge_limit,
        categorization_rows=rows,
    )
    for name, path in {**result.artifacts, **report_artifacts}.items():
        print(f"wrote {path}")
    print(
        "rmse_reduction_pct: "
        f"{result.metrics['rmse_reduction_pct']:.2f}"
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except PipelineError as exc:
        record = {
            "stage": exc.stage,
            "error": type(exc.cause).__name__,
            "message": str(exc.cause),
        }
    except (StreamaugError, OSError, ValueError) as exc:
        record = {
            "stage": getattr(args, "command", "cli"),
            "error": type(exc).__name__,
            "message": str(exc),
        }
    print(json.dumps(record), file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
