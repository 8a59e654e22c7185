"""Synthetic text probes: does a scorer react to rendered words alone?

A probe renders vocabulary grams as plain text images (no scene, no object,
just glyphs on a flat background) and asks a scorer to rate each image
against its own transcription. Any systematic positive response is bias
toward written text rather than visual content.

Rendering is pixel-deterministic: the embedded bitmap face from fonts.py,
integer scaling only, text centered on a fixed canvas. Four foreground and
background pairings cover the contrast range; grey means 128 exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .fonts import BASE_SIZE, draw_text, text_extent
from .geometry import ImageBuffer
from .textmatch import tokenize

DEFAULT_CANVAS = 224
DEFAULT_FONT_SIZE = 32
MIN_FONT_SIZE = BASE_SIZE  # 8 px: one cell at scale 1
MARGIN = 8
DEFAULT_VOCAB_CAP = 400_000
DEFAULT_FREQ_BINS = 6


class Template(str, Enum):
    BLACK_ON_WHITE = "black_on_white"
    BLACK_ON_GREY = "black_on_grey"
    WHITE_ON_GREY = "white_on_grey"
    WHITE_ON_BLACK = "white_on_black"


_TEMPLATE_COLORS: dict[Template, tuple[int, int]] = {
    Template.BLACK_ON_WHITE: (0, 255),
    Template.BLACK_ON_GREY: (0, 128),
    Template.WHITE_ON_GREY: (255, 128),
    Template.WHITE_ON_BLACK: (255, 0),
}

ALL_TEMPLATES: tuple[Template, ...] = tuple(Template)


# ---------------------------------------------------------------------------
# vocabulary
# ---------------------------------------------------------------------------

def build_ngram_vocab(corpus: Iterable[str], n: int, cap: int = DEFAULT_VOCAB_CAP) -> list[tuple[str, int]]:
    """Top-cap contiguous n-grams over per-record token windows.

    Windows never cross record boundaries. Ranking is by descending count,
    ties broken lexicographically, so the result is order-independent in the
    corpus and reproducible.
    """
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    counts: Counter = Counter()
    for record in corpus:
        toks = tokenize(record)
        for i in range(len(toks) - n + 1):
            counts[" ".join(toks[i : i + n])] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:cap]


def save_vocab(vocab: Sequence[tuple[str, int]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for gram, count in vocab:
            fh.write(f"{gram}\t{count}\n")


def load_vocab(path: str | Path) -> list[tuple[str, int]]:
    vocab: list[tuple[str, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            gram, _, count = line.rstrip("\n").partition("\t")
            vocab.append((gram, int(count)))
    return vocab


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def render_syn_text(
    gram: str,
    template: Template,
    width: int = DEFAULT_CANVAS,
    height: int = DEFAULT_CANVAS,
    font_size: int = DEFAULT_FONT_SIZE,
) -> ImageBuffer:
    """Render a gram centered on a flat canvas; RGB, bit-deterministic.

    The text is scaled down in whole cell steps (sizes font_size, ...,
    16, 8) until it fits with at least MARGIN px on every side; it is never
    scaled up. A gram that cannot fit at size 8 raises ValueError.
    """
    if not gram:
        raise ValueError("cannot render an empty gram")
    if font_size < MIN_FONT_SIZE or font_size % BASE_SIZE:
        raise ValueError(f"font_size must be a positive multiple of {BASE_SIZE}")
    template = Template(template)
    fg, bg = _TEMPLATE_COLORS[template]

    chosen = 0
    for scale in range(font_size // BASE_SIZE, 0, -1):
        text_w, text_h = text_extent(gram, scale)
        if text_w <= width - 2 * MARGIN and text_h <= height - 2 * MARGIN:
            chosen = scale
            break
    if not chosen:
        raise ValueError(
            f"gram of {len(gram)} characters cannot fit {width}x{height} "
            f"even at minimum font size {MIN_FONT_SIZE}"
        )

    img = ImageBuffer.blank(width, height, channels=3, fill=bg)
    text_w, text_h = text_extent(gram, chosen)
    x = (width - text_w) // 2
    y = (height - text_h) // 2
    draw_text(img.pixels, gram, x, y, color=(fg, fg, fg), scale=chosen)
    return img


# ---------------------------------------------------------------------------
# banding
# ---------------------------------------------------------------------------

def group_by_frequency(vocab: Sequence[tuple[str, int]], bins: int = DEFAULT_FREQ_BINS) -> dict[str, int]:
    """Map gram -> log10-spaced frequency band; band 0 holds the most frequent.

    Bands split [min_count, max_count] into `bins` log10 intervals. A corpus
    where every gram has the same count collapses into band 0.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not vocab:
        return {}
    counts = [c for _, c in vocab]
    lo, hi = math.log10(min(counts)), math.log10(max(counts))
    span = hi - lo
    bands: dict[str, int] = {}
    for gram, count in vocab:
        if span == 0.0:
            bands[gram] = 0
        else:
            u = (hi - math.log10(count)) / span
            bands[gram] = min(bins - 1, int(u * bins))
    return bands


def group_by_length(vocab: Sequence[tuple[str, int]]) -> dict[str, int]:
    """Map gram -> character-length band; band i covers lengths [2i, 2i+2)."""
    return {gram: len(gram) // 2 for gram, _ in vocab}


# ---------------------------------------------------------------------------
# probe harness
# ---------------------------------------------------------------------------

@dataclass
class ProbeItem:
    gram: str
    template: str
    score: float | None
    error: str | None = None


@dataclass
class ProbeGroupStat:
    grouping: str
    band: int
    template: str
    count: int
    mean: float
    std: float


@dataclass
class ProbeReport:
    items: list[ProbeItem]
    groups: list[ProbeGroupStat]
    template_stats: list[ProbeGroupStat]  # grouping == "all", one row per template
    mean_score: float | None              # grand aggregate over scored items
    failures: int


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def run_probe(
    scorer,
    vocab: Sequence[tuple[str, int]],
    templates: Sequence[Template] = ALL_TEMPLATES,
    groupings: Mapping[str, Mapping[str, int]] | None = None,
    width: int = DEFAULT_CANVAS,
    height: int = DEFAULT_CANVAS,
    font_size: int = DEFAULT_FONT_SIZE,
) -> ProbeReport:
    """Render every (gram, template) cell, score it, aggregate by band.

    A scorer exception marks that item failed and the run continues; failed
    items are excluded from every aggregate and surfaced in the count.
    """
    if groupings is None:
        groupings = {
            "frequency": group_by_frequency(vocab),
            "length": group_by_length(vocab),
        }
    items: list[ProbeItem] = []
    for gram, _count in vocab:
        for template in templates:
            template = Template(template)
            image = render_syn_text(gram, template, width, height, font_size)
            try:
                value = float(scorer.score(image, gram))
            except Exception as exc:  # a scorer crash must not sink the run
                items.append(ProbeItem(gram, template.value, None, f"{type(exc).__name__}: {exc}"))
                continue
            items.append(ProbeItem(gram, template.value, value))

    groups: list[ProbeGroupStat] = []
    for name in sorted(groupings):
        bands = groupings[name]
        cells: dict[tuple[int, str], list[float]] = {}
        for item in items:
            if item.score is None or item.gram not in bands:
                continue
            cells.setdefault((bands[item.gram], item.template), []).append(item.score)
        for (band, template_value), values in sorted(cells.items()):
            mean, std = _mean_std(values)
            groups.append(ProbeGroupStat(name, band, template_value, len(values), mean, std))

    template_stats: list[ProbeGroupStat] = []
    for template in templates:
        values = [i.score for i in items if i.score is not None and i.template == Template(template).value]
        if values:
            mean, std = _mean_std(values)
            template_stats.append(ProbeGroupStat("all", 0, Template(template).value, len(values), mean, std))

    scored = [i.score for i in items if i.score is not None]
    mean_score = sum(scored) / len(scored) if scored else None
    failures = sum(1 for i in items if i.score is None)
    return ProbeReport(items, groups, template_stats, mean_score, failures)
