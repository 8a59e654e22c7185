"""Score providers and relative scores.

A provider rates (image, caption) affinity. The image argument is either a
real ImageBuffer (probe renders) or a VariantView naming one of a pair's
scoring variants; view-based providers are how precomputed tables and
synthetic scorers plug in without touching pixels.

Relative scores subtract a text-removal variant from the untouched image:
    rsa = s_raw - s_all_removed   (all text gone)
    rsc = s_raw - s_co_removed    (only caption-overlapping text gone)
A scorer that only reads visual content nets ~0; a scorer that rewards
matching written text drops when the words disappear, pushing rsc > 0.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ingest import ExternalScoreTable, FormatError, PairRecord, VARIANT_TAGS
from .textmatch import CoMatch

logger = logging.getLogger(__name__)

SCORE_FIELDS = ("s_raw", "s_all_removed", "s_co_removed", "s_rand_all", "s_rand_co")
_TAG_TO_FIELD = dict(zip(VARIANT_TAGS, SCORE_FIELDS))


@dataclass
class VariantView:
    """Reference to one scoring variant of one pair."""

    id: str
    tag: str
    comatch: CoMatch | None = None


class ScoreProvider:
    """Base capability: name + score(image_or_view, caption).

    Returns a float, or None when the provider has no value for the item
    (absence propagates, it is not an error). Implementations that can
    produce out-of-range values clamp to [-1, 1] and warn.
    """

    name = "abstract"

    def score(self, image, caption: str) -> float | None:
        raise NotImplementedError


class TableScorer(ScoreProvider):
    def __init__(self, table: ExternalScoreTable) -> None:
        self.name = "table"
        self.table = table

    def score(self, image, caption: str) -> float | None:
        if not isinstance(image, VariantView):
            raise TypeError("table scorer rates variant views, not raw images")
        return self.table.get(image.id, image.tag)


def table_scorer(table: ExternalScoreTable) -> TableScorer:
    return TableScorer(table)


class EmbeddingCosineScorer(ScoreProvider):
    """Cosine over precomputed, aligned vector stores.

    image_vectors is keyed by (id, variant tag); text_vectors by id.
    """

    def __init__(self, image_vectors: Mapping, text_vectors: Mapping) -> None:
        self.name = "cosine"
        self.image_vectors = image_vectors
        self.text_vectors = text_vectors

    def score(self, image, caption: str) -> float | None:
        if not isinstance(image, VariantView):
            raise TypeError("cosine scorer rates variant views, not raw images")
        a = self.image_vectors.get((image.id, image.tag))
        b = self.text_vectors.get(image.id)
        if a is None or b is None:
            return None
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        na = float(np.linalg.norm(a))
        nb = float(np.linalg.norm(b))
        if na == 0.0 or nb == 0.0:
            raise ValueError(f"zero-norm vector for id '{image.id}'")
        return float(a @ b / (na * nb))


def embedding_cosine_scorer(image_vectors: Mapping, text_vectors: Mapping) -> EmbeddingCosineScorer:
    return EmbeddingCosineScorer(image_vectors, text_vectors)


class MockTextBiasScorer(ScoreProvider):
    """Synthetic scorer with a dialled-in text bias: base + alpha * visible cotr.

    Removing text zeroes the removed words' contribution: the all_removed and
    co_removed variants see no caption overlap, while the random-removal
    baselines leave this pair's own text untouched.
    """

    def __init__(self, base: float = 0.2, alpha: float = 0.5) -> None:
        self.name = "mock"
        self.base = base
        self.alpha = alpha

    def score(self, image, caption: str) -> float | None:
        if not isinstance(image, VariantView):
            raise TypeError("mock scorer rates variant views, not raw images")
        if image.tag in ("all_removed", "co_removed"):
            visible = 0.0
        else:
            if image.comatch is None:
                raise ValueError(f"mock scorer needs a comatch for id '{image.id}'")
            visible = image.comatch.cotr
        value = self.base + self.alpha * visible
        if not -1.0 <= value <= 1.0:
            clamped = min(1.0, max(-1.0, value))
            logger.warning("mock score %.4f out of [-1, 1]; clamped to %.1f", value, clamped)
            return clamped
        return value


def mock_text_bias_scorer(base: float = 0.2, alpha: float = 0.5) -> MockTextBiasScorer:
    return MockTextBiasScorer(base, alpha)


# ---------------------------------------------------------------------------
# relative scores
# ---------------------------------------------------------------------------

@dataclass
class ScoreRecord:
    id: str
    s_raw: float | None = None
    s_all_removed: float | None = None
    s_co_removed: float | None = None
    s_rand_all: float | None = None
    s_rand_co: float | None = None
    rsa: float | None = None
    rsc: float | None = None
    error: str | None = None


def relative_scores(
    pairs: Sequence[PairRecord],
    comatches: Mapping[str, CoMatch] | None,
    scorer: ScoreProvider,
    variants: Sequence[str] = VARIANT_TAGS,
) -> list[ScoreRecord]:
    """Score every pair on every requested variant; absence propagates.

    A scorer exception flags the pair and the run continues.
    """
    for tag in variants:
        if tag not in VARIANT_TAGS:
            raise ValueError(f"unknown variant tag '{tag}'")
    records: list[ScoreRecord] = []
    for pair in pairs:
        record = ScoreRecord(id=pair.id)
        comatch = comatches.get(pair.id) if comatches else None
        try:
            for tag in variants:
                view = VariantView(id=pair.id, tag=tag, comatch=comatch)
                value = scorer.score(view, pair.caption)
                setattr(record, _TAG_TO_FIELD[tag], value)
        except Exception as exc:  # flag and move on; one bad pair must not sink the run
            record = ScoreRecord(id=pair.id, error=f"{type(exc).__name__}: {exc}")
            records.append(record)
            continue
        if record.s_raw is not None and record.s_all_removed is not None:
            record.rsa = record.s_raw - record.s_all_removed
        if record.s_raw is not None and record.s_co_removed is not None:
            record.rsc = record.s_raw - record.s_co_removed
        records.append(record)
    return records


RELATIVE_CSV_FIELDS = (
    "id", "s_raw", "s_all_removed", "s_co_removed", "s_rand_all", "s_rand_co",
    "rsa", "rsc", "error",
)


def save_relative_scores(records: Sequence[ScoreRecord], path: str | Path) -> None:
    """CSV of per-pair variant scores; floats kept at full repr precision."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RELATIVE_CSV_FIELDS)
        for record in records:
            row = []
            for field_name in RELATIVE_CSV_FIELDS:
                value = getattr(record, field_name)
                if value is None:
                    row.append("")
                elif isinstance(value, float):
                    row.append(repr(value))
                else:
                    row.append(value)
            writer.writerow(row)


def load_relative_scores(path: str | Path) -> list[ScoreRecord]:
    records: list[ScoreRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != list(RELATIVE_CSV_FIELDS):
            raise FormatError(f"{path}: bad relative-scores header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(RELATIVE_CSV_FIELDS):
                raise FormatError(f"{path}:{lineno}: expected {len(RELATIVE_CSV_FIELDS)} fields")
            values = dict(zip(RELATIVE_CSV_FIELDS, row))
            record = ScoreRecord(id=values["id"])
            for field_name in RELATIVE_CSV_FIELDS[1:-1]:
                text = values[field_name]
                if text:
                    try:
                        setattr(record, field_name, float(text))
                    except ValueError:
                        raise FormatError(f"{path}:{lineno}: bad {field_name} '{text}'") from None
            if values["error"]:
                record.error = values["error"]
            records.append(record)
    return records


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

METRIC_FIELDS = SCORE_FIELDS + ("rsa", "rsc")

HIST_BINS = 40  # fixed [-1, 1] grid so histograms are comparable across runs


@dataclass
class MetricStat:
    count: int
    mean: float
    std: float


@dataclass
class ClusterStats:
    cluster: int
    size: int
    metrics: dict[str, MetricStat]


@dataclass
class ClusterAggregate:
    clusters: list[ClusterStats]
    rsa_hist: list[int]
    rsc_hist: list[int]
    hist_edges: list[float]


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    # two-pass: immune to catastrophic cancellation on offset-heavy data
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def _histogram(values: list[float]) -> list[int]:
    hist = [0] * HIST_BINS
    for v in values:
        idx = int((v + 1.0) / 2.0 * HIST_BINS)
        hist[min(HIST_BINS - 1, max(0, idx))] += 1
    return hist


def aggregate_by_cluster(
    records: Sequence[ScoreRecord],
    labels: Mapping[str, int],
    merged: Mapping[int, int] | None = None,
) -> ClusterAggregate:
    """Per-cluster mean/std (population) of every score field plus rsa/rsc.

    Absent values are skipped; each metric carries its own coverage count.
    """
    missing = sorted(r.id for r in records if r.id not in labels)
    if missing:
        raise ValueError(f"records without cluster labels: {', '.join(missing)}")

    by_cluster: dict[int, list[ScoreRecord]] = {}
    for record in records:
        label = labels[record.id]
        if merged is not None:
            label = merged[label]
        by_cluster.setdefault(int(label), []).append(record)

    clusters: list[ClusterStats] = []
    for label in sorted(by_cluster):
        members = by_cluster[label]
        metrics: dict[str, MetricStat] = {}
        for field_name in METRIC_FIELDS:
            values = [getattr(r, field_name) for r in members]
            present = [v for v in values if v is not None]
            if present:
                mean, std = _mean_std(present)
                metrics[field_name] = MetricStat(len(present), mean, std)
            else:
                metrics[field_name] = MetricStat(0, math.nan, math.nan)
        clusters.append(ClusterStats(cluster=label, size=len(members), metrics=metrics))

    edges = [-1.0 + 2.0 * i / HIST_BINS for i in range(HIST_BINS + 1)]
    rsa_values = [r.rsa for r in records if r.rsa is not None]
    rsc_values = [r.rsc for r in records if r.rsc is not None]
    return ClusterAggregate(
        clusters=clusters,
        rsa_hist=_histogram(rsa_values),
        rsc_hist=_histogram(rsc_values),
        hist_edges=edges,
    )
