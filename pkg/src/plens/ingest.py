"""Dataset ingestion: manifests, OCR sidecars, embeddings, external scores.

File formats are line-oriented where possible so that billion-row datasets can
be streamed; loaders here return materialized structures because everything
downstream is desk-scale. Serializers emit a canonical form (fixed key order,
compact separators, UTF-8, LF) and loaders accept exactly that form plus
harmless extras, so serialize(load(x)) == x byte-for-byte on canonical files.

OCR presence is tri-state and the distinction is load-bearing everywhere
downstream: an id missing from the OCR map means "never scanned", an entry
with zero spans means "scanned, no text found".
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

VARIANT_TAGS = ("raw", "all_removed", "co_removed", "rand_all", "rand_co")
SCORE_VARIANTS = VARIANT_TAGS + ("aesthetic",)

EMBEDDINGS_MAGIC = b"PLEB"
EMBEDDINGS_VERSION = 1


class FormatError(ValueError):
    """A file violated its documented format or schema."""


@dataclass
class PairRecord:
    id: str
    image_ref: str
    caption: str
    cluster: int | None = None


@dataclass
class OcrSpan:
    poly: list[list[float]]
    text: str
    conf: float


@dataclass
class OcrResult:
    id: str
    spans: list[OcrSpan]


@dataclass
class EmbeddingMatrix:
    vectors: np.ndarray  # (count, dim) float32

    @property
    def count(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass
class ExternalScoreTable:
    entries: dict[tuple[str, str], float] = field(default_factory=dict)

    def get(self, pair_id: str, variant: str) -> float | None:
        return self.entries.get((pair_id, variant))

    def ids(self) -> set[str]:
        return {pair_id for pair_id, _ in self.entries}


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.errors


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def iter_manifest(path: str | Path) -> Iterator[PairRecord]:
    """Stream manifest records, failing fast on malformed or duplicate rows."""
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"manifest line {lineno}: malformed record: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise FormatError(f"manifest line {lineno}: record is not an object")
            for key in ("id", "image", "caption"):
                if key not in obj:
                    raise FormatError(f"manifest line {lineno}: missing field '{key}'")
                if not isinstance(obj[key], str):
                    raise FormatError(f"manifest line {lineno}: field '{key}' is not a string")
            if not obj["id"]:
                raise FormatError(f"manifest line {lineno}: empty id")
            if obj["id"] in seen:
                raise FormatError(f"manifest line {lineno}: duplicate id '{obj['id']}'")
            seen.add(obj["id"])
            yield PairRecord(id=obj["id"], image_ref=obj["image"], caption=obj["caption"])


def load_manifest(path: str | Path) -> list[PairRecord]:
    return list(iter_manifest(path))


def manifest_line(record: PairRecord) -> str:
    payload = {"id": record.id, "image": record.image_ref, "caption": record.caption}
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def save_manifest(records: Iterable[PairRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(manifest_line(record) + "\n")


# ---------------------------------------------------------------------------
# OCR sidecar
# ---------------------------------------------------------------------------

def _parse_number(value, what: str, lineno: int) -> float:
    # bool is an int subclass; a polygon coordinate of `true` is garbage.
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"ocr line {lineno}: {what} is not a number")
    return value


def _parse_span(obj, lineno: int) -> OcrSpan:
    if not isinstance(obj, dict):
        raise FormatError(f"ocr line {lineno}: span is not an object")
    for key in ("poly", "text", "conf"):
        if key not in obj:
            raise FormatError(f"ocr line {lineno}: span missing field '{key}'")
    poly = obj["poly"]
    if not isinstance(poly, list) or len(poly) < 3:
        raise FormatError(f"ocr line {lineno}: polygon has fewer than 3 points")
    points: list[list[float]] = []
    for pt in poly:
        if not isinstance(pt, list) or len(pt) != 2:
            raise FormatError(f"ocr line {lineno}: polygon point is not an [x, y] pair")
        points.append([
            _parse_number(pt[0], "polygon x", lineno),
            _parse_number(pt[1], "polygon y", lineno),
        ])
    if not isinstance(obj["text"], str):
        raise FormatError(f"ocr line {lineno}: span text is not a string")
    conf = _parse_number(obj["conf"], "confidence", lineno)
    if not 0.0 <= conf <= 1.0:
        raise FormatError(f"ocr line {lineno}: confidence {conf} outside [0, 1]")
    return OcrSpan(poly=points, text=obj["text"], conf=conf)


def load_ocr(path: str | Path) -> dict[str, OcrResult]:
    results: dict[str, OcrResult] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"ocr line {lineno}: malformed record: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise FormatError(f"ocr line {lineno}: record is not an object")
            if "id" not in obj or not isinstance(obj["id"], str) or not obj["id"]:
                raise FormatError(f"ocr line {lineno}: missing or empty id")
            if "spans" not in obj or not isinstance(obj["spans"], list):
                raise FormatError(f"ocr line {lineno}: missing spans list")
            if obj["id"] in results:
                raise FormatError(f"ocr line {lineno}: duplicate id '{obj['id']}'")
            spans = [_parse_span(s, lineno) for s in obj["spans"]]
            results[obj["id"]] = OcrResult(id=obj["id"], spans=spans)
    return results


def ocr_line(result: OcrResult) -> str:
    payload = {
        "id": result.id,
        "spans": [
            {"poly": [[x, y] for x, y in span.poly], "text": span.text, "conf": span.conf}
            for span in result.spans
        ],
    }
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def save_ocr(results: Iterable[OcrResult], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for result in results:
            fh.write(ocr_line(result) + "\n")


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------

def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    raw = Path(path).read_bytes()
    header = struct.calcsize("<4sIQI")
    if len(raw) < header:
        raise FormatError(
            f"embeddings file truncated: expected at least {header} header bytes, found {len(raw)}"
        )
    magic, version, count, dim = struct.unpack_from("<4sIQI", raw, 0)
    if magic != EMBEDDINGS_MAGIC:
        raise FormatError(f"embeddings file has bad magic {magic!r}")
    if version != EMBEDDINGS_VERSION:
        raise FormatError(f"embeddings file has unsupported version {version}")
    if dim < 1:
        raise FormatError("embeddings file declares dim < 1")
    expected = header + count * dim * 4
    if len(raw) != expected:
        raise FormatError(
            f"embeddings file truncated: expected {expected} bytes, found {len(raw)}"
        )
    vectors = np.frombuffer(raw, dtype="<f4", count=count * dim, offset=header)
    vectors = vectors.reshape(count, dim).copy()
    if not np.all(np.isfinite(vectors)):
        raise FormatError("embeddings file contains NaN or Inf values")
    return EmbeddingMatrix(vectors=vectors)


def save_embeddings(matrix: EmbeddingMatrix | np.ndarray, path: str | Path) -> None:
    vectors = matrix.vectors if isinstance(matrix, EmbeddingMatrix) else np.asarray(matrix)
    if vectors.ndim != 2:
        raise ValueError("embeddings must be a 2-d array")
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("refusing to write NaN or Inf embeddings")
    count, dim = vectors.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIQI", EMBEDDINGS_MAGIC, EMBEDDINGS_VERSION, count, dim))
        fh.write(vectors.tobytes())


# ---------------------------------------------------------------------------
# external score table
# ---------------------------------------------------------------------------

def load_scores(path: str | Path) -> ExternalScoreTable:
    table = ExternalScoreTable()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        # '#'-prefixed lines carry provenance comments (e.g. model identifiers
        # pinned by exporters) and are not part of the schema.
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows, None)
        if header != ["id", "variant", "score"]:
            raise FormatError("scores file must start with header 'id,variant,score'")
        for row in rows:
            lineno = rows.line_num
            if len(row) != 3:
                raise FormatError(f"scores line {lineno}: expected 3 columns, found {len(row)}")
            pair_id, variant, score_text = row
            if not pair_id:
                raise FormatError(f"scores line {lineno}: empty id")
            if variant not in SCORE_VARIANTS:
                raise FormatError(f"scores line {lineno}: unknown variant '{variant}'")
            try:
                score = float(score_text)
            except ValueError as exc:
                raise FormatError(f"scores line {lineno}: score '{score_text}' is not a number") from exc
            if not math.isfinite(score):
                raise FormatError(f"scores line {lineno}: score is not finite")
            if (pair_id, variant) in table.entries:
                raise FormatError(f"scores line {lineno}: duplicate entry for ({pair_id}, {variant})")
            table.entries[(pair_id, variant)] = score
    return table


def save_scores(table: ExternalScoreTable, path: str | Path, header_comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header_comment is not None:
            fh.write(f"# {header_comment}\n")
        fh.write("id,variant,score\n")
        for (pair_id, variant), score in sorted(table.entries.items()):
            fh.write(f"{pair_id},{variant},{score!r}\n")


# ---------------------------------------------------------------------------
# dataset-level validation
# ---------------------------------------------------------------------------

def validate_dataset(
    records: list[PairRecord],
    ocr: dict[str, OcrResult] | None = None,
    embeddings: EmbeddingMatrix | None = None,
    scores: ExternalScoreTable | None = None,
) -> ValidationReport:
    """Cross-check loaded inputs. Valid iff zero errors; warnings are advisory."""
    report = ValidationReport()
    ids: set[str] = set()
    for record in records:
        if not record.id:
            report.errors.append("record with empty id")
            continue
        if record.id in ids:
            report.errors.append(f"duplicate id '{record.id}'")
        ids.add(record.id)
        if not record.caption:
            report.warnings.append(f"empty caption: id '{record.id}'")

    if ocr is not None:
        for ocr_id in sorted(set(ocr) - ids):
            report.warnings.append(f"ocr id '{ocr_id}' not in manifest")
        missing = len(ids - set(ocr))
        if missing:
            report.warnings.append(f"{missing} manifest ids have no ocr entry")

    if embeddings is not None:
        if embeddings.count != len(records):
            report.errors.append(
                f"embedding count {embeddings.count} != manifest record count {len(records)}"
            )
        if not np.all(np.isfinite(embeddings.vectors)):
            report.errors.append("embeddings contain NaN or Inf values")

    if scores is not None:
        for score_id in sorted(scores.ids() - ids):
            report.errors.append(f"scores id '{score_id}' not in manifest")

    return report


def validate_paths(
    manifest_path: str | Path,
    ocr_path: str | Path | None = None,
    embeddings_path: str | Path | None = None,
    scores_path: str | Path | None = None,
) -> ValidationReport:
    """File-level validation: parse failures become report errors, not raises."""
    report = ValidationReport()
    records: list[PairRecord] = []
    try:
        records = load_manifest(manifest_path)
    except (FormatError, OSError) as exc:
        report.errors.append(str(exc))
        return report

    ocr = None
    if ocr_path is not None:
        try:
            ocr = load_ocr(ocr_path)
        except (FormatError, OSError) as exc:
            report.errors.append(str(exc))

    embeddings = None
    if embeddings_path is not None:
        try:
            embeddings = load_embeddings(embeddings_path)
        except (FormatError, OSError) as exc:
            report.errors.append(str(exc))

    scores = None
    if scores_path is not None:
        try:
            scores = load_scores(scores_path)
        except (FormatError, OSError) as exc:
            report.errors.append(str(exc))

    inner = validate_dataset(records, ocr, embeddings, scores)
    report.errors.extend(inner.errors)
    report.warnings.extend(inner.warnings)
    return report
