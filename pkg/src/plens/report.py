"""Dataset-level reporting.

Aggregates the per-pair match results into the tables a profiling run ends
with: overall text-overlap rates, per-cluster class composition, the
caption-words vs. overlapping-words heatmap, and text-size statistics.
Exports are deterministic (stable field order, 6 significant digits) so a
rerun over the same inputs produces byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .geometry import polygon_area
from .ingest import ExternalScoreTable, OcrResult, PairRecord
from .inpaint import co_span_indices
from .textmatch import CoMatch, PairClass, tokenize


@dataclass
class OverallStats:
    n_total: int
    n_with_emb: int
    n_with_co: int
    cotr_total: float
    cotr_within_emb: float | None
    fuzzy_cotr_total: float
    fuzzy_cotr_within_emb: float | None


def _require_comatches(pairs: Sequence[PairRecord], comatches: Mapping[str, CoMatch]) -> None:
    missing = sorted(p.id for p in pairs if p.id not in comatches)
    if missing:
        raise ValueError(f"pairs without match results: {', '.join(missing)}")


def dataset_stats(pairs: Sequence[PairRecord], comatches: Mapping[str, CoMatch]) -> OverallStats:
    """Counts and mean overlap rates; text-free pairs contribute rate 0.

    The totals therefore satisfy
        cotr_total == cotr_within_emb * n_with_emb / n_total
    which is checked before returning.
    """
    _require_comatches(pairs, comatches)
    n_total = len(pairs)
    if n_total == 0:
        raise ValueError("empty dataset")
    matched = [comatches[p.id] for p in pairs]
    emb = [m for m in matched if m.pair_class != PairClass.NO_EMB_TEXT]
    n_with_emb = len(emb)
    n_with_co = sum(1 for m in matched if m.pair_class == PairClass.PARROT)

    cotr_total = math.fsum(m.cotr for m in matched) / n_total
    fuzzy_total = math.fsum(m.fuzzy_cotr for m in matched) / n_total
    if n_with_emb:
        cotr_within = math.fsum(m.cotr for m in emb) / n_with_emb
        fuzzy_within = math.fsum(m.fuzzy_cotr for m in emb) / n_with_emb
        if abs(cotr_total - cotr_within * n_with_emb / n_total) > 1e-9:
            raise RuntimeError("overlap-rate consistency identity violated")
    else:
        cotr_within = None
        fuzzy_within = None
    return OverallStats(
        n_total=n_total,
        n_with_emb=n_with_emb,
        n_with_co=n_with_co,
        cotr_total=cotr_total,
        cotr_within_emb=cotr_within,
        fuzzy_cotr_total=fuzzy_total,
        fuzzy_cotr_within_emb=fuzzy_within,
    )


@dataclass
class ClusterComposition:
    cluster: int
    size: int
    no_emb_text: float
    emb_no_co: float
    parrot: float


def cluster_composition(
    pairs: Sequence[PairRecord],
    comatches: Mapping[str, CoMatch],
    labels: Mapping[str, int],
) -> list[ClusterComposition]:
    """Per-cluster class ratios, sorted most-parrot-heavy first."""
    _require_comatches(pairs, comatches)
    unlabeled = sorted(p.id for p in pairs if p.id not in labels)
    if unlabeled:
        raise ValueError(f"pairs without cluster labels: {', '.join(unlabeled)}")
    tallies: dict[int, dict[PairClass, int]] = {}
    for pair in pairs:
        cluster = int(labels[pair.id])
        tally = tallies.setdefault(cluster, {c: 0 for c in PairClass})
        tally[comatches[pair.id].pair_class] += 1
    rows = []
    for cluster in sorted(tallies):
        tally = tallies[cluster]
        size = sum(tally.values())
        rows.append(
            ClusterComposition(
                cluster=cluster,
                size=size,
                no_emb_text=tally[PairClass.NO_EMB_TEXT] / size,
                emb_no_co=tally[PairClass.EMB_NO_CO] / size,
                parrot=tally[PairClass.PARROT] / size,
            )
        )
    rows.sort(key=lambda r: (-r.parrot, r.cluster))
    return rows


def word_count_heatmap(
    pairs: Sequence[PairRecord],
    comatches: Mapping[str, CoMatch],
    max_words: int = 40,
) -> np.ndarray:
    """Counts over (unique caption words, overlapping words) pairs.

    Cell (i, j) counts pairs with i unique caption words of which j also
    appear in the image text; counts above max_words clamp into the last
    bin. j <= i always, so the strict upper triangle stays zero.
    """
    if max_words < 1:
        raise ValueError("max_words must be >= 1")
    _require_comatches(pairs, comatches)
    grid = np.zeros((max_words + 1, max_words + 1), dtype=np.int64)
    for pair in pairs:
        i = min(len(set(tokenize(pair.caption))), max_words)
        j = min(len(comatches[pair.id].co_words), max_words)
        grid[i, j] += 1
    return grid


@dataclass
class TextSizeRow:
    id: str
    area_ratio: float
    s_raw: float | None


@dataclass
class TextSizeStats:
    rows: list[TextSizeRow]
    co_sizes: list[float]
    other_sizes: list[float]
    skipped_no_dims: int


def text_size_stats(
    pairs: Sequence[PairRecord],
    ocr: Mapping[str, OcrResult],
    comatches: Mapping[str, CoMatch],
    dims: Mapping[str, tuple[int, int]],
    scores: ExternalScoreTable | None = None,
) -> TextSizeStats:
    """Relates embedded-text footprint to scores and word classes.

    area_ratio = (sum of caption-overlapping span areas) / image area. The
    size distributions assign each span's full polygon area to every word it
    contains, split by whether the word reaches the caption. Pairs without
    known image dimensions are skipped and counted.
    """
    _require_comatches(pairs, comatches)
    rows: list[TextSizeRow] = []
    co_sizes: list[float] = []
    other_sizes: list[float] = []
    skipped = 0
    for pair in pairs:
        result = ocr.get(pair.id)
        if result is None:
            continue
        size = dims.get(pair.id)
        if size is None:
            skipped += 1
            continue
        width, height = size
        image_area = float(width) * float(height)
        if image_area <= 0:
            raise ValueError(f"non-positive image area for id '{pair.id}'")
        comatch = comatches[pair.id]
        co_set = set(comatch.co_words)
        co_idx = set(co_span_indices(result, comatch))
        total_co_area = math.fsum(polygon_area(result.spans[i].poly) for i in co_idx)
        s_raw = scores.get(pair.id, "raw") if scores is not None else None
        rows.append(TextSizeRow(id=pair.id, area_ratio=total_co_area / image_area, s_raw=s_raw))
        for span in result.spans:
            area = polygon_area(span.poly)
            for word in tokenize(span.text):
                if word in co_set:
                    co_sizes.append(area)
                else:
                    other_sizes.append(area)
    return TextSizeStats(rows=rows, co_sizes=co_sizes, other_sizes=other_sizes, skipped_no_dims=skipped)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _fmt(value) -> object:
    """Normalize numbers to 6 significant digits for stable output."""
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(format(float(value), ".6g"))
    return value


def report_rows(report) -> tuple[list[str], list[dict]]:
    """Flatten a report object into (field order, rows) for export."""
    if isinstance(report, OverallStats):
        fields = [
            "n_total", "n_with_emb", "n_with_co",
            "cotr_total", "cotr_within_emb",
            "fuzzy_cotr_total", "fuzzy_cotr_within_emb",
        ]
        return fields, [{f: getattr(report, f) for f in fields}]
    if isinstance(report, list) and all(isinstance(r, ClusterComposition) for r in report):
        fields = ["cluster", "size", "no_emb_text", "emb_no_co", "parrot"]
        return fields, [{f: getattr(r, f) for f in fields} for r in report]
    if isinstance(report, np.ndarray) and report.ndim == 2:
        fields = ["caption_words", "co_words", "count"]
        rows = []
        for i, j in np.argwhere(report):
            rows.append({"caption_words": int(i), "co_words": int(j), "count": int(report[i, j])})
        rows.sort(key=lambda r: (r["caption_words"], r["co_words"]))
        return fields, rows
    if isinstance(report, TextSizeStats):
        fields = ["kind", "id", "area_ratio", "s_raw", "size"]
        rows: list[dict] = []
        for row in report.rows:
            rows.append({"kind": "pair", "id": row.id, "area_ratio": row.area_ratio,
                         "s_raw": row.s_raw, "size": None})
        for value in report.co_sizes:
            rows.append({"kind": "co_size", "id": None, "area_ratio": None, "s_raw": None, "size": value})
        for value in report.other_sizes:
            rows.append({"kind": "other_size", "id": None, "area_ratio": None, "s_raw": None, "size": value})
        return fields, rows
    raise TypeError(f"unsupported report type: {type(report).__name__}")


def export_report(report, path, fmt: str = "csv") -> None:
    fields, rows = report_rows(report)
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow(["" if (v := _fmt(row[f])) is None else v for f in fields])
        text = buffer.getvalue()
    elif fmt == "jsonl":
        lines = []
        for row in rows:
            lines.append(json.dumps(
                {f: _fmt(row[f]) for f in fields},
                ensure_ascii=False, separators=(",", ":"),
            ))
        text = "".join(line + "\n" for line in lines)
    else:
        raise ValueError(f"unknown report format '{fmt}'")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
