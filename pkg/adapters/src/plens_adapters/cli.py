"""Command-line entry points for the three export scripts.

Each script is standalone: it reads a manifest, runs its engine, and writes
one interchange file plus a ``.meta.json`` sidecar. ``--limit`` stops after
N records leaving a resumable ``.part`` file; rerunning the same command
completes it. Progress goes to stderr; exit code 0 covers both a finished
export and a deliberate partial, 1 is an input error, 2 a usage error.
"""

from __future__ import annotations

import argparse
import sys

from .export import (
    DEFAULT_AESTHETIC_MODEL,
    DEFAULT_BATCH,
    DEFAULT_EMBEDDING_MODEL,
    DEFAULT_OCR_MODEL,
    DEFAULT_SIMILARITY_MODEL,
    ExportSummary,
    export_embeddings,
    export_ocr,
    export_scores,
)
from .formats import FormatError


def _common_flags(parser: argparse.ArgumentParser, default_model: str) -> None:
    parser.add_argument("--manifest", required=True, help="pair manifest (JSONL)")
    parser.add_argument("--out", required=True, help="output file path")
    parser.add_argument("--model", default=default_model, help="model identifier")
    parser.add_argument("--batch", type=int, default=DEFAULT_BATCH,
                        help="records per progress checkpoint")
    parser.add_argument("--limit", type=int, default=None,
                        help="process at most N records, leaving a resumable partial")


def _report(kind: str, summary: ExportSummary) -> int:
    if summary.finished:
        print(f"{kind}: {summary.done}/{summary.total} records, "
              f"{len(summary.errors)} errors -> {summary.out}", file=sys.stderr)
    else:
        print(f"{kind}: {summary.done}/{summary.total} records, "
              f"resumable partial -> {summary.out}.part", file=sys.stderr)
    return 0


def _run(kind: str, worker, parser: argparse.ArgumentParser, argv) -> int:
    args = parser.parse_args(argv)
    try:
        return _report(kind, worker(args))
    except ValueError as exc:
        if isinstance(exc, FormatError):
            print(f"error: {exc}", file=sys.stderr)
            return 1
        parser.error(str(exc))  # bad model id / batch / limit -> exit 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_embeddings(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plens-export-embeddings",
        description="Export one embedding vector per manifest record.",
    )
    _common_flags(parser, DEFAULT_EMBEDDING_MODEL)
    parser.add_argument("--images-root", default=None,
                        help="base directory for image refs (default: manifest directory)")
    return _run("embeddings", lambda a: export_embeddings(
        a.manifest, a.out, model=a.model, batch=a.batch, limit=a.limit,
        images_root=a.images_root), parser, argv)


def main_ocr(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plens-export-ocr",
        description="Export recognized text spans per manifest record.",
    )
    _common_flags(parser, DEFAULT_OCR_MODEL)
    parser.add_argument("--images-root", default=None,
                        help="base directory for image refs (default: manifest directory)")
    return _run("ocr", lambda a: export_ocr(
        a.manifest, a.out, model=a.model, batch=a.batch, limit=a.limit,
        images_root=a.images_root), parser, argv)


def main_scores(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plens-export-scores",
        description="Export similarity and aesthetic scores per image variant.",
    )
    _common_flags(parser, DEFAULT_SIMILARITY_MODEL)
    parser.add_argument("--variants", required=True,
                        help="directory holding <id>.<variant>.png images")
    parser.add_argument("--aesthetic-model", default=DEFAULT_AESTHETIC_MODEL)
    return _run("scores", lambda a: export_scores(
        a.manifest, a.variants, a.out, model=a.model,
        aesthetic_model=a.aesthetic_model, batch=a.batch, limit=a.limit), parser, argv)


if __name__ == "__main__":  # pragma: no cover - convenience dispatcher
    sys.exit(main_embeddings())
