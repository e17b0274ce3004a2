"""Command-line interface: one executable, subcommands over a JSON config.

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
stderr; results go to files or stdout as documented per subcommand.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import briefing as briefing_mod
from . import classify as clf
from . import evaluate, pipeline, recovery as recovery_mod
from .config import PipelineConfig, load_config
from .corpus import ClassLabel
from .ingest import (
    FeedParseError,
    FixtureSource,
    SourceError,
    StoreError,
    collect_documents,
    fetch_feed,
    fetch_usgs_events,
    filter_events,
    get_event,
    load_documents,
    persist,
)
from .recovery import UnrecoveredError

logger = logging.getLogger("quakebrief")

USAGE_EXIT = 1
DATA_EXIT = 2


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_poll(args, config: PipelineConfig) -> int:
    feed_file = args.feed_file or config.feed_file
    payload = fetch_feed(args.feed_url or config.feed_url, feed_file)
    result = fetch_usgs_events(payload)
    for err in result.errors:
        print(f"warning: {err}", file=sys.stderr)
    significant = filter_events(result.events)
    receipt = persist(args.store or config.store_dir, events=significant)
    _emit({
        "events_seen": len(result.events),
        "events_significant": len(significant),
        "written": receipt.written_events,
        "skipped": receipt.skipped_events,
        "feature_errors": len(result.errors),
    })
    return 0


def _parse_source_spec(spec: str) -> FixtureSource:
    kind, sep, path = spec.partition(":")
    if not sep:
        kind, path = "fixture", spec
    if kind not in ("news", "social", "fixture"):
        raise ValueError(f"unknown source kind {kind!r} in --source (use kind:path)")
    return FixtureSource(path, kind=kind)


def cmd_collect(args, config: PipelineConfig) -> int:
    store = args.store or config.store_dir
    event = get_event(store, args.event)
    source = _parse_source_spec(args.source)
    docs = collect_documents(event, source, config.window)
    receipt = persist(store, documents=docs)
    _emit({
        "event": event.id,
        "collected": len(docs),
        "written": receipt.written_documents,
        "skipped": receipt.skipped_documents,
    })
    return 0


def cmd_train(args, config: PipelineConfig) -> int:
    params = dict(config.classifiers[args.model].params)
    if args.seed is not None:
        params["seed"] = args.seed
    data = args.data or config.training_data
    out = Path(args.out) if args.out else config.checkpoint_for(args.model)
    model, vocab, train_acc = pipeline.train_model(
        args.model, data, params, config.feature_scheme, args.unlabeled
    )
    clf.save_model(out, model, vocab, config.feature_scheme)
    _emit({"model": args.model, "out": str(out), "train_accuracy": round(train_acc, 4)})
    return 0


def cmd_classify(args, config: PipelineConfig) -> int:
    store = args.store or config.store_dir
    sentences = pipeline.event_sentences(store, args.event)
    if not sentences:
        raise StoreError(f"no documents collected for event {args.event!r}")
    rows = []
    if args.model == "keyword":
        keyword_lists = clf.load_keyword_lists(config.keywords_file)
        for s in sentences:
            rows.append((s, clf.keyword_classify(s, keyword_lists)))
    else:
        models = pipeline.load_ensemble(config)
        labeled = pipeline.classify_sentences(sentences, models)
        for s, label, votes in labeled:
            if args.model == "ensemble":
                rows.append((s, label))
            else:
                rows.append((s, votes[args.model]))
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for s, label in rows:
            out.write(json.dumps({
                "document_id": s.document_id,
                "sentence_index": s.index,
                "text": s.text,
                "label": label.name,
            }, ensure_ascii=False) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_brief(args, config: PipelineConfig) -> int:
    store = args.store or config.store_dir
    event = get_event(store, args.event)
    sentences = pipeline.event_sentences(store, args.event)
    if not sentences:
        raise StoreError(f"no documents collected for event {args.event!r}")
    models = pipeline.load_ensemble(config)
    labeled = [(s, label) for s, label, _ in pipeline.classify_sentences(sentences, models)]
    brief = briefing_mod.assemble_briefing(
        event,
        labeled,
        summary_ratio=config.summarizer["ratio"],
        min_sentences=config.summarizer["min_sentences"],
        max_sentences=config.summarizer["max_sentences"],
    )
    out = Path(args.out) if args.out else config.output_dir / f"{event.id}_briefing.md"
    out.parent.mkdir(parents=True, exist_ok=True)
    fmt = "plain" if out.suffix == ".txt" else "markdown"
    out.write_bytes(briefing_mod.render(brief, fmt))
    sidecar = out.with_name(out.stem + "_provenance.json")
    sidecar.write_text(
        json.dumps(brief.provenance, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {out} and {sidecar}", file=sys.stderr)
    return 0


def cmd_recovery(args, config: PipelineConfig) -> int:
    from . import plots

    store = args.store or config.store_dir
    event = get_event(store, args.event)
    docs = load_documents(store, args.event)
    posts = [d for d in docs if d.source == "social"] or docs
    if not posts:
        raise StoreError(f"no documents collected for event {args.event!r}")
    out_dir = Path(args.out_dir) if args.out_dir else config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    series_list, curve = recovery_mod.analyze_posts(posts, event.occurred_at, config.recovery)
    report = {
        "event": event.id,
        "factors": [
            {"name": r.factor, "t0": r.t0, "t1": r.t1, "t_r_days": r.t_r_days}
            for r in curve.results
        ],
        "aggregate_days": curve.aggregate_days,
        "curve": [{"day": day, "q": q} for day, q in curve.curve_points()],
    }
    results_by_name = {r.factor: r for r in curve.results}
    plots.plot_recovery_curve(curve, out_dir / f"recovery_{event.id}_curve.svg")
    for series in series_list:
        plots.plot_frequency_series(
            series, results_by_name.get(series.factor),
            out_dir / f"recovery_{event.id}_{series.factor}.svg",
        )
    with (out_dir / f"recovery_{event.id}_curve.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "q"])
        for day, q in curve.curve_points():
            writer.writerow([day, f"{q:.6g}"])

    if args.survey:
        s_results, s_config = recovery_mod.aggregate_survey(
            args.survey, config.aspect_to_factor, t0=event.occurred_at
        )
        s_curve = recovery_mod.build_recovery_curve(s_results, s_config)
        report["survey"] = {
            "factors": [
                {"name": r.factor, "t0": r.t0, "t1": r.t1, "t_r_days": r.t_r_days}
                for r in s_curve.results
            ],
            "aggregate_days": s_curve.aggregate_days,
            "curve": [{"day": day, "q": q} for day, q in s_curve.curve_points()],
        }
        plots.plot_recovery_curve(s_curve, out_dir / f"recovery_{event.id}_survey_curve.svg")

    out_json = out_dir / f"recovery_{event.id}.json"
    out_json.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(report)
    return 0


def cmd_eval_rouge(args, config: PipelineConfig) -> int:
    candidate = Path(args.candidate).read_text(encoding="utf-8")
    reference = Path(args.reference).read_text(encoding="utf-8")
    out = {}
    for key, score in (
        ("rouge1", evaluate.rouge_n(candidate, reference, 1)),
        ("rouge2", evaluate.rouge_n(candidate, reference, 2)),
        ("rougeL", evaluate.rouge_l(candidate, reference)),
    ):
        out[key] = {"p": round(score.precision, 4), "r": round(score.recall, 4), "f1": round(score.f1, 4)}
    _emit(out)
    return 0


def cmd_eval_accuracy(args, config: PipelineConfig) -> int:
    def read_labels(path):
        lines = [l.strip() for l in Path(path).read_text(encoding="utf-8").splitlines() if l.strip()]
        return [ClassLabel[l] for l in lines]

    report = evaluate.accuracy(read_labels(args.pred), read_labels(args.truth))
    _emit({
        "accuracy": round(report.accuracy, 4),
        "n": report.n,
        "confusion": report.confusion.tolist(),
        "labels": [l.name for l in ClassLabel],
    })
    return 0


def build_parser() -> CliParser:
    parser = CliParser(prog="quakebrief", description=__doc__)
    parser.add_argument("--config", help="path to the pipeline JSON config (or $QB_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    p = sub.add_parser("poll", help="fetch the event feed, filter, and persist")
    p.add_argument("--once", action="store_true", required=True,
                   help="run a single poll (recurrence belongs to the host scheduler)")
    p.add_argument("--feed-file", help="read the feed payload from a local file")
    p.add_argument("--feed-url")
    p.add_argument("--store")
    p.set_defaults(func=cmd_poll)

    p = sub.add_parser("collect", help="collect documents for an event from a source")
    p.add_argument("--event", required=True)
    p.add_argument("--source", required=True, help="source spec kind:path (kind: news|social|fixture)")
    p.add_argument("--store")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="train one classifier and write a checkpoint")
    p.add_argument("--model", required=True, choices=["lr", "svm", "cnn", "gan"])
    p.add_argument("--data", help="labeled CSV (text,label); defaults to the bundled dataset")
    p.add_argument("--out", help="checkpoint directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--unlabeled", help="extra unlabeled sentences for the GAN (one per line)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify an event's collected sentences")
    p.add_argument("--event", required=True)
    p.add_argument("--model", default="ensemble",
                   choices=["ensemble", "lr", "svm", "cnn", "gan", "keyword"])
    p.add_argument("--out", help="output JSONL file (default stdout)")
    p.add_argument("--store")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("brief", help="assemble the five-section briefing for an event")
    p.add_argument("--event", required=True)
    p.add_argument("--out", help="output markdown (.md) or plain-text (.txt) file")
    p.add_argument("--store")
    p.set_defaults(func=cmd_brief)

    p = sub.add_parser("recovery", help="estimate recovery time from social posts (and a survey)")
    p.add_argument("--event", required=True)
    p.add_argument("--survey", help="survey CSV (aspect,affected,duration,unit)")
    p.add_argument("--out-dir")
    p.add_argument("--store")
    p.set_defaults(func=cmd_recovery)

    p = sub.add_parser("eval", help="evaluation utilities")
    eval_sub = p.add_subparsers(dest="eval_command", required=True, parser_class=CliParser)
    pr = eval_sub.add_parser("rouge", help="ROUGE-1/2/L between two text files")
    pr.add_argument("--candidate", required=True)
    pr.add_argument("--reference", required=True)
    pr.set_defaults(func=cmd_eval_rouge)
    pa = eval_sub.add_parser("accuracy", help="accuracy between two label files")
    pa.add_argument("--pred", required=True)
    pa.add_argument("--truth", required=True)
    pa.set_defaults(func=cmd_eval_accuracy)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except (FeedParseError, StoreError, SourceError, UnrecoveredError, ValueError,
            KeyError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
