"""Curated-subset construction.

Filters take the profiling outputs (OCR spans, caption/text matches, score
records) and return id sets. Sampling is always seeded and applied after
filtering, so the same inputs and seed reproduce the same subset byte for
byte.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest import ExternalScoreTable, OcrResult, PairRecord
from .scoring import ScoreRecord
from .seeds import splitmix_stream
from .textmatch import CoMatch

logger = logging.getLogger(__name__)

FILTER_KINDS = ("presence", "cotr", "rsa", "rsc", "simple-fix", "eval-split")
PRESENCE_MODES = ("random", "no_emb_text", "emb_text_only")
COMPARATORS = ("eq", "ge", "lt")


@dataclass
class CurationSpec:
    """One curation request: which filter, how to compare, how to sample."""

    kind: str = "presence"
    comparator: str = "ge"
    threshold: float = 0.0
    target_size: int | None = None
    seed: int = 0
    clip_thresh: float = 0.3
    aes_thresh: float = 0.45
    dedup_sim: float = 0.95

    def validate(self) -> None:
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind '{self.kind}'")
        if self.comparator not in COMPARATORS:
            raise ValueError(f"unknown comparator '{self.comparator}'")
        if self.kind == "cotr" and not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"cotr threshold {self.threshold} outside [0, 1]")
        if self.target_size is not None and self.target_size < 0:
            raise ValueError("target_size must be >= 0")


def _compare(value: float, comparator: str, threshold: float) -> bool:
    if comparator == "eq":
        return value == threshold
    if comparator == "ge":
        return value >= threshold
    if comparator == "lt":
        return value < threshold
    raise ValueError(f"unknown comparator '{comparator}'")


def filter_by_presence(
    pairs: Sequence[PairRecord],
    ocr: Mapping[str, OcrResult],
    mode: str,
) -> set[str]:
    """Presence-based subsets; pairs without OCR coverage are excluded.

    random keeps every covered id (sampling happens later); no_emb_text keeps
    ids whose OCR found nothing; emb_text_only keeps ids with spans.
    """
    if mode not in PRESENCE_MODES:
        raise ValueError(f"unknown presence mode '{mode}'")
    selected: set[str] = set()
    missing = 0
    for pair in pairs:
        result = ocr.get(pair.id)
        if result is None:
            missing += 1
            continue
        has_text = len(result.spans) > 0
        if mode == "random" or (mode == "emb_text_only") == has_text:
            selected.add(pair.id)
    if missing:
        logger.warning("presence filter: %d pairs had no OCR result and were excluded", missing)
    return selected


def filter_by_cotr(
    comatches: Mapping[str, CoMatch],
    ocr: Mapping[str, OcrResult],
    comparator: str,
    threshold: float,
) -> set[str]:
    """CoTR predicate over the pairs that actually carry embedded text.

    Restricting candidates to texted images means threshold 0.0 with `eq`
    names the texted-but-no-overlap subset rather than the whole dataset.
    """
    if comparator not in COMPARATORS:
        raise ValueError(f"unknown comparator '{comparator}'")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"cotr threshold {threshold} outside [0, 1]")
    selected = set()
    for pair_id, comatch in comatches.items():
        result = ocr.get(pair_id)
        if result is None or not result.spans:
            continue
        if _compare(comatch.cotr, comparator, threshold):
            selected.add(pair_id)
    return selected


def filter_by_relative(
    records: Sequence[ScoreRecord],
    metric: str,
    comparator: str,
    threshold: float,
) -> set[str]:
    """Relative-score predicate; records missing the metric are skipped."""
    if metric not in ("rsa", "rsc"):
        raise ValueError(f"unknown relative metric '{metric}'")
    if comparator not in COMPARATORS:
        raise ValueError(f"unknown comparator '{comparator}'")
    selected = set()
    absent = 0
    for record in records:
        value = getattr(record, metric)
        if value is None:
            absent += 1
            continue
        if _compare(value, comparator, threshold):
            selected.add(record.id)
    if absent:
        logger.warning("relative filter: %d records had no %s value", absent, metric)
    return selected


# ---------------------------------------------------------------------------
# simple fix pipeline
# ---------------------------------------------------------------------------

def simple_fix_pipeline(
    pairs: Sequence[PairRecord],
    ocr: Mapping[str, OcrResult],
    scores: ExternalScoreTable,
    labels: Mapping[str, int],
    embeddings: Mapping[str, np.ndarray],
    spec: CurationSpec | None = None,
) -> tuple[set[str], list[tuple[str, int]]]:
    """Three-stage cleanup: drop texted images, threshold scores, dedup.

    Stage 2 keeps s_raw > clip_thresh and aesthetic > aes_thresh, both
    strict. Stage 3 groups within-cluster embeddings at cosine >= dedup_sim
    (transitively) and keeps each group's highest-raw-score id, breaking ties
    toward the lexicographically smallest id. Returns the survivor set plus
    per-stage survivor counts.
    """
    if spec is None:
        spec = CurationSpec(kind="simple-fix")
    counts: list[tuple[str, int]] = [("input", len(pairs))]

    # stage 1: drop every pair whose OCR found embedded text
    stage1: list[PairRecord] = []
    for pair in pairs:
        result = ocr.get(pair.id)
        if result is None:
            raise ValueError(f"stage 1 (text removal): missing OCR result for id '{pair.id}'")
        if not result.spans:
            stage1.append(pair)
    counts.append(("no_embedded_text", len(stage1)))

    # stage 2: strict score thresholds
    stage2: list[PairRecord] = []
    for pair in stage1:
        s_raw = scores.get(pair.id, "raw")
        aes = scores.get(pair.id, "aesthetic")
        if s_raw is None or aes is None:
            which = "raw" if s_raw is None else "aesthetic"
            raise ValueError(f"stage 2 (score filter): missing {which} score for id '{pair.id}'")
        if s_raw > spec.clip_thresh and aes > spec.aes_thresh:
            stage2.append(pair)
    counts.append(("score_thresholds", len(stage2)))

    # stage 3: per-cluster dedup by embedding cosine
    by_cluster: dict[int, list[str]] = {}
    for pair in stage2:
        if pair.id not in labels:
            raise ValueError(f"stage 3 (dedup): missing cluster label for id '{pair.id}'")
        if pair.id not in embeddings:
            raise ValueError(f"stage 3 (dedup): missing embedding for id '{pair.id}'")
        by_cluster.setdefault(int(labels[pair.id]), []).append(pair.id)

    survivors: set[str] = set()
    for members in by_cluster.values():
        members = sorted(members)
        vectors = np.stack([np.asarray(embeddings[m], dtype=np.float64) for m in members])
        norms = np.linalg.norm(vectors, axis=1)
        norms[norms == 0.0] = 1.0
        unit = vectors / norms[:, None]
        sims = unit @ unit.T

        parent = list(range(len(members)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                if sims[i, j] >= spec.dedup_sim:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[max(ri, rj)] = min(ri, rj)

        groups: dict[int, list[str]] = {}
        for i, member in enumerate(members):
            groups.setdefault(find(i), []).append(member)
        for group in groups.values():
            # highest raw score wins; lexicographic id breaks ties
            best = min(group, key=lambda m: (-scores.get(m, "raw"), m))
            survivors.add(best)
    counts.append(("cluster_dedup", len(survivors)))
    return survivors, counts


# ---------------------------------------------------------------------------
# eval split + sampling
# ---------------------------------------------------------------------------

def build_eval_split(
    pairs: Sequence[PairRecord],
    ocr: Mapping[str, OcrResult],
    records: Sequence[ScoreRecord],
    size_each: int,
    seed: int,
    rsc_thresh: float = 0.2,
) -> tuple[list[str], list[str]]:
    """Two disjoint eval pools: text-free pairs, and strong-parrot pairs.

    Clean ids have empty OCR spans; parrot ids have rsc above rsc_thresh.
    Both are seeded uniform samples of size_each.
    """
    clean_pool = filter_by_presence(pairs, ocr, "no_emb_text")
    parrot_pool = {r.id for r in records if r.rsc is not None and r.rsc > rsc_thresh}
    if len(clean_pool) < size_each:
        raise ValueError(
            f"clean pool has {len(clean_pool)} candidates, need {size_each}"
        )
    if len(parrot_pool) < size_each:
        raise ValueError(
            f"parrot pool has {len(parrot_pool)} candidates, need {size_each}"
        )
    clean = sample_subset(clean_pool, size_each, splitmix_stream(seed, 0))
    parrot = sample_subset(parrot_pool, size_each, splitmix_stream(seed, 1))
    return clean, parrot


def sample_subset(ids: Iterable[str], size: int, seed: int) -> list[str]:
    """Uniform sample without replacement; output sorted for stable manifests."""
    pool = sorted(set(ids))
    if size > len(pool):
        raise ValueError(f"sample size {size} exceeds pool size {len(pool)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pool))
    return sorted(pool[i] for i in order[:size])
