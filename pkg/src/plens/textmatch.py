"""Caption/OCR text matching: tokenization, overlap rates, pair classes.

The co-embedded text rate (cotr) of a pair is the fraction of unique caption
words that also appear in the image's OCR text. It is the load-bearing number
of the whole toolkit: a pair with cotr > 0 has a caption that at least partly
transcribes pixels instead of describing them.

Determinism beats linguistic cleverness here: tokenization is a plain
codepoint-level rule (lowercase, split on every non-alphanumeric codepoint)
with no stemming, no diacritic folding and no locale dependence.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .ingest import OcrResult, PairRecord

DEFAULT_TAU = 0.8


class PairClass(str, Enum):
    NO_EMB_TEXT = "NoEmbText"   # OCR ran, found no text
    EMB_NO_CO = "EmbNoCo"       # text in pixels, none of it in the caption
    PARROT = "Parrot"           # caption repeats at least one embedded word


@dataclass
class CoMatch:
    """Per-pair match outcome; co_words is sorted for stable serialization."""

    id: str
    co_words: list[str]
    cotr: float
    fuzzy_cotr: float
    pair_class: PairClass


def tokenize(text: str) -> list[str]:
    """Lowercase, split on every non-alphanumeric codepoint, drop empties."""
    out: list[str] = []
    buf: list[str] = []
    for ch in text.lower():
        if ch.isalnum():
            buf.append(ch)
        elif buf:
            out.append("".join(buf))
            buf.clear()
    if buf:
        out.append("".join(buf))
    return out


def _ocr_vocab(ocr_texts: Iterable[str]) -> set[str]:
    vocab: set[str] = set()
    for text in ocr_texts:
        vocab.update(tokenize(text))
    return vocab


def co_emb_words(caption: str, ocr_texts: Iterable[str]) -> list[str]:
    """Sorted unique caption words that also occur in the OCR text."""
    return sorted(set(tokenize(caption)) & _ocr_vocab(ocr_texts))


def cotr(caption: str, ocr_texts: Iterable[str]) -> float:
    """Exact co-embedded text rate; 0.0 when the caption has no words."""
    cap_words = set(tokenize(caption))
    if not cap_words:
        return 0.0
    return len(cap_words & _ocr_vocab(ocr_texts)) / len(cap_words)


def levenshtein(a: str, b: str) -> int:
    """Edit distance, two-row dynamic programme."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    cur = [0] * (len(b) + 1)
    for i, ca in enumerate(a, start=1):
        cur[0] = i
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev, cur = cur, prev
    return prev[len(b)]


def similarity(a: str, b: str) -> float:
    """Normalized edit similarity: 1 - lev/max(len); 1.0 for two empties."""
    if a == b:
        return 1.0
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def fuzzy_cotr(caption: str, ocr_texts: Iterable[str], tau: float = DEFAULT_TAU) -> float:
    """Fraction of unique caption words with an OCR word of similarity >= tau.

    tau = 1.0 degenerates to the exact rate; lower tau absorbs the OCR engine's
    single-character slips. tau must lie in (0, 1].
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    cap_words = set(tokenize(caption))
    if not cap_words:
        return 0.0
    vocab = _ocr_vocab(ocr_texts)
    hits = 0
    for word in cap_words:
        if word in vocab:
            hits += 1
            continue
        wl = len(word)
        for other in vocab:
            # lev >= |len difference|, so this bound prunes without a DP pass
            longest = max(wl, len(other))
            if longest == 0 or 1.0 - abs(wl - len(other)) / longest < tau:
                continue
            if similarity(word, other) >= tau:
                hits += 1
                break
    return hits / len(cap_words)


def classify_pair(ocr: OcrResult, cotr_value: float) -> PairClass:
    """Three-way class from span presence and exact rate."""
    if not ocr.spans:
        return PairClass.NO_EMB_TEXT
    return PairClass.PARROT if cotr_value > 0.0 else PairClass.EMB_NO_CO


def match_pair(record: PairRecord, ocr: OcrResult, tau: float = DEFAULT_TAU) -> CoMatch:
    """Compute the full match outcome for one (caption, OCR) pair."""
    if record.id != ocr.id:
        raise ValueError(f"id mismatch: record '{record.id}' vs ocr '{ocr.id}'")
    texts = [span.text for span in ocr.spans]
    words = co_emb_words(record.caption, texts)
    rate = cotr(record.caption, texts)
    fuzzy = fuzzy_cotr(record.caption, texts, tau)
    return CoMatch(
        id=record.id,
        co_words=words,
        cotr=rate,
        fuzzy_cotr=fuzzy,
        pair_class=classify_pair(ocr, rate),
    )
