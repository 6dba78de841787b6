"""CLI: extract --manifest <csv> --out <path> [--batch-size N] [--backend NAME]."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backends import BACKENDS
from .extractor import ManifestError, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-extract",
        description="Convert listing photos into scene labels plus embedding vectors.",
    )
    parser.add_argument("--manifest", required=True, help="CSV of photo_id,post_id,path")
    parser.add_argument("--out", required=True, help="embeddings JSONL output path")
    parser.add_argument("--batch-size", type=int, default=16, dest="batch_size")
    parser.add_argument("--backend", default="builtin", choices=sorted(BACKENDS),
                        help="feature encoder (default: builtin, no model download)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if not Path(args.manifest).exists():
        print(f"manifest {args.manifest} does not exist", file=sys.stderr)
        return 2
    try:
        stats = extract(args.manifest, args.out, args.backend, args.batch_size)
    except (ManifestError, ValueError, RuntimeError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(f"wrote {stats.written} records to {args.out} "
          f"({stats.skipped} skipped, {stats.unknown_label} labelled unknown)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
