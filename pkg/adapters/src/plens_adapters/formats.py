"""Interchange-format twins for the profiling pipeline's file schemas.

The adapters talk to the profiling pipeline only through files, so this module
restates the four formats from their on-disk contracts rather than importing
the pipeline:

- manifest:   JSONL, one object per pair with string fields id/image/caption
- OCR:        JSONL, {"id", "spans": [{"poly": [[x, y], ...], "text", "conf"}]};
              an id with no line at all means the model never produced output
- embeddings: "PLEB" header (<4sIQI: magic, version, count, dim) + float32 LE
              rows, row i belonging to manifest record i
- scores:     CSV "id,variant,score" where variant is one of the five image
              variants or "aesthetic"; '#'-prefixed lines are provenance
              comments and not part of the schema
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

EMBEDDINGS_MAGIC = b"PLEB"
EMBEDDINGS_VERSION = 1
EMBEDDINGS_HEADER = "<4sIQI"

SIMILARITY_VARIANTS = ("raw", "all_removed", "co_removed", "rand_all", "rand_co")
AESTHETIC_VARIANT = "aesthetic"


class FormatError(ValueError):
    """A file does not follow one of the interchange schemas."""


@dataclass
class ManifestRow:
    id: str
    image: str
    caption: str


@dataclass
class Span:
    poly: list[tuple[float, float]]
    text: str
    conf: float


def iter_manifest(path: str | Path) -> Iterator[ManifestRow]:
    """Stream manifest rows, failing fast on malformed or duplicate records."""
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"manifest line {lineno}: malformed record: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise FormatError(f"manifest line {lineno}: record is not an object")
            for key in ("id", "image", "caption"):
                if key not in obj or not isinstance(obj[key], str):
                    raise FormatError(f"manifest line {lineno}: missing string field '{key}'")
            if not obj["id"]:
                raise FormatError(f"manifest line {lineno}: empty id")
            if obj["id"] in seen:
                raise FormatError(f"manifest line {lineno}: duplicate id '{obj['id']}'")
            seen.add(obj["id"])
            yield ManifestRow(id=obj["id"], image=obj["image"], caption=obj["caption"])


def read_manifest(path: str | Path) -> list[ManifestRow]:
    return list(iter_manifest(path))


def ocr_line(pair_id: str, spans: Sequence[Span]) -> bytes:
    payload = {
        "id": pair_id,
        "spans": [
            {"poly": [[float(x), float(y)] for x, y in s.poly], "text": s.text, "conf": s.conf}
            for s in spans
        ],
    }
    return (json.dumps(payload, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")


def embeddings_header(count: int, dim: int) -> bytes:
    return struct.pack(EMBEDDINGS_HEADER, EMBEDDINGS_MAGIC, EMBEDDINGS_VERSION, count, dim)


def embedding_row(vector: np.ndarray, dim: int) -> bytes:
    vector = np.ascontiguousarray(vector, dtype="<f4")
    if vector.shape != (dim,):
        raise ValueError(f"vector shape {vector.shape} != ({dim},)")
    if not np.all(np.isfinite(vector)):
        raise ValueError("refusing to write NaN or Inf embedding values")
    return vector.tobytes()


def score_line(pair_id: str, variant: str, value: float) -> bytes:
    if variant not in SIMILARITY_VARIANTS and variant != AESTHETIC_VARIANT:
        raise ValueError(f"unknown score variant '{variant}'")
    return f"{pair_id},{variant},{value!r}\n".encode("utf-8")
