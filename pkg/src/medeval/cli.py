"""
Command line entry point.

    medeval extract  CORPUS --profile n2c2 --extractor baseline -o preds.jsonl
    medeval evaluate CORPUS --gold GOLD --predictions preds.jsonl --profile n2c2 -o out/
    medeval adjust   out/report.json --field REASON --scenario pr:0.668,0.331 --n-gold 1342
    medeval stratify CORPUS --gold GOLD --predictions preds.jsonl --profile i2b2
    medeval report   out/report.json --format csv

Exit status: 0 success, 1 evaluation contract violation, 2 extraction
failures, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

from medeval.corpus_io import MedField, load_documents
from medeval.errors import ConfigError, InfeasibleScenarioError, MedEvalError
from medeval.extractors.remote import CACHE_DIR_ENV, RemotePolicy
from medeval.matcher import MatchMode, write_traces
from medeval.metrics import EvalReport, Granularity, Scenario, adjust_with_field, prf
from medeval.pipeline import (
    baseline_extractor, evaluate, load_gold, read_predictions, remote_extractor,
    run_extract, stratify,
)
from medeval.profiles import load_profile

EXIT_OK, EXIT_CONTRACT, EXIT_EXTRACTION, EXIT_CONFIG = 0, 1, 2, 3


def _profile(args):
    overrides = {"max_chars": getattr(args, "max_chars", None),
                 "token_base": getattr(args, "token_base", None),
                 "granularity": getattr(args, "granularity", None)}
    return load_profile(args.profile, overrides)


def cmd_extract(args) -> int:
    profile = _profile(args)
    docs = load_documents(args.corpus, profile.layout)
    if args.extractor == "remote":
        if not args.endpoint:
            raise ConfigError("--endpoint is required for the remote extractor")
        policy = RemotePolicy(timeout=args.timeout, retries=args.retries)
        cache_dir = args.cache_dir or os.environ.get(CACHE_DIR_ENV)
        extractor = remote_extractor(args.endpoint, policy, cache_dir)
        workers = args.workers or policy.max_in_flight
    else:
        extractor = baseline_extractor(args.lexicon, args.rules, args.window)
        workers = args.workers or 1
    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as out:
        results = run_extract(docs, extractor, profile, out, workers, progress=sys.stderr)
    failed = [r for r in results if r.error]
    print(f"{len(results) - len(failed)} document(s) extracted, {len(failed)} failed",
          file=sys.stderr)
    if failed:
        print("errors:", file=sys.stderr)
        for r in failed:
            print(f"  {r.doc_id}: {r.error}", file=sys.stderr)
        return EXIT_EXTRACTION
    return EXIT_OK


def _load_inputs(args, profile):
    docs = load_documents(args.corpus, profile.layout)
    stats = Counter()
    gold = load_gold(docs, args.gold or args.corpus, profile, stats)
    for key, n in sorted(stats.items()):
        print(f"gold warning: {key} x{n}", file=sys.stderr)
    with open(args.predictions, encoding="utf-8") as fh:
        preds = read_predictions(fh)
    for doc_id, msg in sorted(preds.errors.items()):
        print(f"warning: {doc_id} failed extraction ({msg}); scored as no predictions",
              file=sys.stderr)
    return docs, gold, preds.by_doc


def cmd_evaluate(args) -> int:
    profile = _profile(args)
    docs, gold, preds = _load_inputs(args, profile)
    modes = [MatchMode(m) for m in args.mode] if args.mode else None
    ev = evaluate(docs, gold, preds, profile, modes)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    reports = list(ev.reports.values())
    (out / "report.json").write_text(
        json.dumps({"profile": profile.name, "reports": [r.to_dict() for r in reports]},
                   indent=1, sort_keys=True) + "\n", encoding="utf-8")
    with (out / "report.csv").open("w", encoding="utf-8") as fh:
        for i, r in enumerate(reports):
            csv_text = r.to_csv()
            fh.write(csv_text if i == 0 else csv_text.split("\n", 1)[1])
    (out / "report.txt").write_text("\n\n".join(r.to_text() for r in reports) + "\n",
                                    encoding="utf-8")
    for mode, traces in ev.traces.items():
        with (out / f"traces_{mode.value.lower()}.jsonl").open("w", encoding="utf-8") as fh:
            write_traces(traces.values(), fh)

    for (mode, gran), report in ev.reports.items():
        if gran is profile.granularity:
            print(report.to_text())
            print()
    return EXIT_OK


def _pick_report(path, mode: str | None, granularity: str | None) -> EvalReport:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    reports = [EvalReport.from_dict(r) for r in data["reports"]]
    for r in reports:
        if (mode is None or r.mode.value == mode) and \
                (granularity is None or r.granularity.value == granularity):
            return r
    raise ConfigError(f"{path} has no {mode or ''} {granularity or ''} report")


def cmd_adjust(args) -> int:
    report = _pick_report(args.report, args.mode, Granularity.MICRO.value)
    field = MedField.parse(args.field)
    try:
        scenario = Scenario.parse(args.scenario)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    n_gold = args.n_gold if args.n_gold is not None else report.excluded_gold.get(field, 0)
    base = report.pooled()
    try:
        extra = scenario.counts(n_gold)
    except InfeasibleScenarioError as exc:
        raise ConfigError(f"infeasible scenario: {exc}") from None
    before, after = prf(base), adjust_with_field(base, extra)
    print(f"field {field.value}, scenario {scenario}, n_gold {n_gold}: "
          f"tp={extra.tp} fp={extra.fp} fn={extra.fn}")
    print(f"{'':<10}{'Precision':>10}{'Recall':>10}{'F-Score':>10}")
    for label, m in (("baseline", before), ("adjusted", after)):
        p, r, f = m.rounded()
        print(f"{label:<10}{p:>10}{r:>10}{f:>10}")
    return EXIT_OK


def cmd_stratify(args) -> int:
    profile = _profile(args)
    docs, gold, preds = _load_inputs(args, profile)
    mode = MatchMode(args.mode) if args.mode else None
    result = stratify(docs, gold, preds, profile, mode)
    print(result.to_text())
    if args.output:
        Path(args.output).write_text(json.dumps(result.to_dict(), indent=1, sort_keys=True) + "\n",
                                     encoding="utf-8")
    return EXIT_OK


def cmd_report(args) -> int:
    data = json.loads(Path(args.report).read_text(encoding="utf-8"))
    for i, raw in enumerate(data["reports"]):
        r = EvalReport.from_dict(raw)
        if args.format == "csv":
            text = r.to_csv()
            sys.stdout.write(text if i == 0 else text.split("\n", 1)[1])
        else:
            print(r.to_text())
            print()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medeval",
                                     description="medication extraction evaluation harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_gold=True):
        p.add_argument("corpus", help="directory of UTF-8 note files")
        p.add_argument("--profile", default="n2c2", help="preset name or profile file")
        p.add_argument("--token-base", type=int, choices=(0, 1))
        if with_gold:
            p.add_argument("--gold", help="gold annotation directory (default: corpus)")
            p.add_argument("--predictions", required=True)

    p = sub.add_parser("extract", help="run an extractor over a corpus")
    common(p, with_gold=False)
    p.add_argument("--extractor", choices=("baseline", "remote"), default="baseline")
    p.add_argument("--endpoint")
    p.add_argument("--cache-dir")
    p.add_argument("--timeout", type=float, default=RemotePolicy.timeout)
    p.add_argument("--retries", type=int, default=RemotePolicy.retries)
    p.add_argument("--workers", type=int)
    p.add_argument("--max-chars", type=int)
    p.add_argument("--lexicon")
    p.add_argument("--rules")
    p.add_argument("--window", type=int, default=120)
    p.add_argument("-o", "--output", default="predictions.jsonl")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    common(p)
    p.add_argument("--mode", action="append", choices=[m.value for m in MatchMode])
    p.add_argument("--granularity", choices=[g.value for g in Granularity])
    p.add_argument("-o", "--output", default="report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("adjust", help="add an assumed field performance to a report")
    p.add_argument("report")
    p.add_argument("--field", default="REASON")
    p.add_argument("--scenario", required=True,
                   help="perfect | pr:P,R | f_at_recall:F,R")
    p.add_argument("--n-gold", type=int)
    p.add_argument("--mode", choices=[m.value for m in MatchMode])
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("stratify", help="list vs narrative scores (i2b2 gold)")
    common(p)
    p.add_argument("--mode", choices=[m.value for m in MatchMode])
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stratify)

    p = sub.add_parser("report", help="render a saved report")
    p.add_argument("report")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MedEvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
