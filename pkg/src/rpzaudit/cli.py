"""Command-line interface: validate, run, summarize, synth generate, synth eval."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, RpzAuditError, ValidationError
from .ingest import validate_corpus
from .report import (
    EXIT_CONFIG,
    EXIT_MISSING_INPUT,
    EXIT_OK,
    EXIT_VALIDATION,
    MissingInputError,
    canonical_json,
    format_summary,
    load_corpus,
    load_run_config,
    run_pipeline,
    summarize,
)
from .synth import WorldSpec, evaluate_detector, format_metrics, generate_world, write_world


def _fail(code: int, kind: str, detail: str) -> int:
    print(json.dumps({"error": kind, "detail": detail}), file=sys.stderr)
    return code


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    for name in ("listings", "owners", "reviews", "zones", "permits", "embeddings", "lexicon"):
        parser.add_argument(f"--{name}", help=f"path to the {name} file")
    parser.add_argument("--as-of", dest="as_of", help="run reference date, YYYY-MM-DD")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    _add_input_flags(parser)
    parser.add_argument("--out", help="output directory (default: out)")
    parser.add_argument("--radius-m", dest="radius_m", type=float, help="permit match radius")
    parser.add_argument("--seed", type=int, help="seed echoed into synth-related runs")
    parser.add_argument(
        "--global-dedup", dest="global_dedup", action="store_const", const=True,
        help="link residences across owners, not just within each owner",
    )
    parser.add_argument(
        "--invert-bias", dest="invert_bias", action="store_const", const=True,
        help="negate the sentiment bias (prose semantics: better reviews, more nights)",
    )
    parser.add_argument(
        "--principal-strategy", dest="principal_strategy",
        help="principal residence choice: most_reviews, earliest_created, smallest_id",
    )
    parser.add_argument("--workers", type=int, help="parallel clustering workers")


def _overrides(args: argparse.Namespace) -> dict:
    keys = (
        "listings", "owners", "reviews", "zones", "permits", "embeddings", "lexicon",
        "as_of", "out", "radius_m", "seed", "global_dedup", "invert_bias",
        "principal_strategy", "workers",
    )
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_run_config(args.config, _overrides(args))
    except FileNotFoundError as exc:
        return _fail(EXIT_MISSING_INPUT, "missing_input", str(exc))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    result = run_pipeline(config)
    if result.error is not None:
        print(json.dumps(result.error), file=sys.stderr)
    if result.summary is not None:
        print(format_summary(result.summary))
        print(f"outputs written to {config.out_dir}")
    return result.exit_code


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        config = load_run_config(args.config, _overrides(args))
        corpus, diagnostics = load_corpus(config)
    except MissingInputError as exc:
        return _fail(EXIT_MISSING_INPUT, "missing_input", str(exc))
    except FileNotFoundError as exc:
        return _fail(EXIT_MISSING_INPUT, "missing_input", str(exc))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except ValidationError as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    report = validate_corpus(
        corpus.listings, corpus.owners, corpus.reviews, corpus.photos, corpus.permits,
        as_of=config.as_of,
    )
    reject_total = sum(len(v) for v in diagnostics.rejects.values())
    print(f"parsed: {len(corpus.listings)} listings, {len(corpus.owners)} owners, "
          f"{len(corpus.reviews)} reviews, {len(corpus.photos)} photos, "
          f"{len(corpus.permits)} permit applications, {len(corpus.zones)} zones")
    print(f"rejected records: {reject_total}")
    if report.ok:
        print("corpus valid: no hard violations")
        return EXIT_OK
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "violations.json").write_text(
        canonical_json({"violations": [v.as_dict() for v in report.violations]}) + "\n",
        encoding="utf-8",
    )
    for violation in report.violations:
        print(f"violation [{violation.code}] {violation.message}")
    return EXIT_VALIDATION


def _cmd_summarize(args: argparse.Namespace) -> int:
    path = Path(args.findings)
    if not path.exists():
        return _fail(EXIT_MISSING_INPUT, "missing_input", f"findings file {path} does not exist")
    try:
        summary = summarize(path)
    except ValidationError as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    print(format_summary(summary))
    return EXIT_OK


def _cmd_synth_generate(args: argparse.Namespace) -> int:
    try:
        raw = {}
        if args.spec:
            spec_path = Path(args.spec)
            if not spec_path.exists():
                return _fail(EXIT_MISSING_INPUT, "missing_input", f"spec file {spec_path} does not exist")
            raw = json.loads(spec_path.read_text(encoding="utf-8"))
        if args.seed is not None:
            raw["seed"] = args.seed
        spec = WorldSpec.from_dict(raw)
        world = generate_world(spec)
        paths = write_world(world, args.out)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    print(f"world with {len(world.listings)} listings across {len(world.owners)} owners "
          f"written to {args.out} (seed {spec.seed})")
    for name, path in sorted(paths.items()):
        print(f"  {name}: {path}")
    return EXIT_OK


def _cmd_synth_eval(args: argparse.Namespace) -> int:
    findings = Path(args.findings)
    truth = Path(args.truth)
    for path in (findings, truth):
        if not path.exists():
            return _fail(EXIT_MISSING_INPUT, "missing_input", f"{path} does not exist")
    try:
        metrics = evaluate_detector(findings, truth)
    except ValidationError as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    print(format_metrics(metrics))
    out = Path(args.out) if args.out else findings.parent / "metrics.json"
    out.write_text(canonical_json(metrics) + "\n", encoding="utf-8")
    print(f"metrics written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpzaudit",
        description="Flag potential short-term-letting breaches in Rent Pressure Zones.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute the full pipeline")
    _add_run_flags(run_p)
    run_p.set_defaults(func=_cmd_run)

    val_p = sub.add_parser("validate", help="parse inputs and check referential integrity")
    _add_run_flags(val_p)
    val_p.set_defaults(func=_cmd_validate)

    sum_p = sub.add_parser("summarize", help="recompute the summary from a findings file")
    sum_p.add_argument("--findings", required=True, help="findings.jsonl path")
    sum_p.set_defaults(func=_cmd_summarize)

    synth_p = sub.add_parser("synth", help="synthetic worlds with ground truth")
    synth_sub = synth_p.add_subparsers(dest="synth_command", required=True)

    gen_p = synth_sub.add_parser("generate", help="generate a world")
    gen_p.add_argument("--spec", help="world spec JSON file (defaults apply if omitted)")
    gen_p.add_argument("--seed", type=int, help="override the world spec's seed")
    gen_p.add_argument("--out", required=True, help="output directory")
    gen_p.set_defaults(func=_cmd_synth_generate)

    eval_p = synth_sub.add_parser("eval", help="score findings against ground truth")
    eval_p.add_argument("--findings", required=True, help="findings.jsonl path")
    eval_p.add_argument("--truth", required=True, help="ground_truth.jsonl path")
    eval_p.add_argument("--out", help="metrics.json path (default: next to findings)")
    eval_p.set_defaults(func=_cmd_synth_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RpzAuditError as exc:
        return _fail(EXIT_CONFIG, "error", str(exc))


if __name__ == "__main__":
    sys.exit(main())
