"""Synthetic workspace builder shared by the CLI and acceptance tests.

Generates a complete, deterministic dataset: captions, images with words
stamped into the pixels, OCR spans covering those words, embeddings with
planted cluster structure, and an external score table. Class mix per ten
pairs: three with no embedded text, two whose embedded text misses the
caption, five that parrot caption words.

Backgrounds are noisy on purpose: inpainting a flat region reproduces it
bit-exactly, which would make change-detection assertions vacuous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from plens.fonts import draw_text, text_extent
from plens.geometry import ImageBuffer
from plens.ingest import (
    ExternalScoreTable,
    OcrResult,
    OcrSpan,
    PairRecord,
    save_embeddings,
    save_manifest,
    save_ocr,
    save_scores,
)

# caption vocabulary and the disjoint stamp-only vocabulary; keeping them
# disjoint guarantees exact-match cotr 0 for the "texted but no overlap" class
CAPTION_WORDS = (
    "amber", "barn", "cliff", "dune", "ember", "fjord", "grove", "harbor",
    "island", "jetty", "kiln", "lagoon", "meadow", "night", "orchard", "pond",
    "quarry", "ridge", "summit", "trail", "upland", "valley", "willow", "zephyr",
    "red", "blue", "old", "quiet", "stone", "winter",
)
STAMP_ONLY_WORDS = ("exit", "menu", "open", "sale", "stop", "taxi", "vote", "wifi")


@dataclass
class FixtureInfo:
    root: Path
    ids: list[str] = field(default_factory=list)
    classes: dict[str, str] = field(default_factory=dict)
    captions: dict[str, str] = field(default_factory=dict)
    stamped: dict[str, list[str]] = field(default_factory=dict)
    true_labels: dict[str, int] = field(default_factory=dict)


def _stamp_word(image: ImageBuffer, word: str, x0: int, y0: int, rng) -> OcrSpan:
    dark = bool(rng.integers(0, 2))
    color = (20, 20, 20) if dark else (245, 245, 245)
    draw_text(image.pixels, word, x0, y0, color, scale=1)
    w, h = text_extent(word, scale=1)
    poly = [
        (float(x0 - 1), float(y0 - 1)),
        (float(x0 + w + 1), float(y0 - 1)),
        (float(x0 + w + 1), float(y0 + h + 1)),
        (float(x0 - 1), float(y0 + h + 1)),
    ]
    return OcrSpan(poly=poly, text=word, conf=float(rng.uniform(0.6, 1.0)))


def build_workspace(
    root: Path | str,
    n_pairs: int,
    seed: int = 1234,
    image_size: int = 48,
    dim: int = 16,
    k_true: int = 8,
    write_images: bool = True,
) -> FixtureInfo:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    images_dir = root / "images"
    if write_images:
        images_dir.mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)
    info = FixtureInfo(root=root)

    records: list[PairRecord] = []
    ocr_results: list[OcrResult] = []
    centers = rng.normal(0.0, 5.0, size=(k_true, dim))
    vectors = np.zeros((n_pairs, dim), dtype=np.float64)
    score_entries: dict[tuple[str, str], float] = {}

    for i in range(n_pairs):
        pair_id = f"pair{i:05d}"
        info.ids.append(pair_id)
        slot = i % 10
        if slot < 3:
            cls = "no_text"
        elif slot < 5:
            cls = "emb_no_co"
        else:
            cls = "parrot"
        info.classes[pair_id] = cls

        n_words = int(rng.integers(3, 7))
        caption_words = [
            CAPTION_WORDS[int(rng.integers(len(CAPTION_WORDS)))] for _ in range(n_words)
        ]
        caption = " ".join(caption_words)
        info.captions[pair_id] = caption
        records.append(PairRecord(id=pair_id, image_ref=f"images/{pair_id}.png", caption=caption))

        image = None
        if write_images:
            pixels = rng.integers(110, 240, size=(image_size, image_size, 3)).astype(np.uint8)
            image = ImageBuffer(pixels=pixels)
        else:
            rng.integers(110, 240, size=(image_size, image_size, 3))  # keep the stream aligned

        if cls == "no_text":
            stamp_words = []
        elif cls == "emb_no_co":
            stamp_words = [STAMP_ONLY_WORDS[int(rng.integers(len(STAMP_ONLY_WORDS)))]]
        else:
            count = 2 if i % 4 == 1 else 1
            stamp_words = [
                caption_words[int(rng.integers(len(caption_words)))] for _ in range(count)
            ]
        info.stamped[pair_id] = list(stamp_words)

        spans: list[OcrSpan] = []
        for j, word in enumerate(stamp_words):
            w, h = text_extent(word, scale=1)
            lane = image_size // max(1, len(stamp_words))
            x0 = int(rng.integers(1, max(2, image_size - w - 1)))
            y_low = j * lane + 1
            y_high = max(y_low + 1, (j + 1) * lane - h - 1)
            y0 = int(rng.integers(y_low, y_high))
            if write_images:
                spans.append(_stamp_word(image, word, x0, y0, rng))
            else:
                rng.integers(0, 2)  # mirror _stamp_word's draws
                conf = float(rng.uniform(0.6, 1.0))
                poly = [
                    (float(x0 - 1), float(y0 - 1)),
                    (float(x0 + w + 1), float(y0 - 1)),
                    (float(x0 + w + 1), float(y0 + h + 1)),
                    (float(x0 - 1), float(y0 + h + 1)),
                ]
                spans.append(OcrSpan(poly=poly, text=word, conf=conf))
        ocr_results.append(OcrResult(id=pair_id, spans=spans))
        if write_images:
            image.to_png(images_dir / f"{pair_id}.png")

        label = i % k_true
        info.true_labels[pair_id] = label
        vectors[i] = centers[label] + rng.normal(0.0, 0.1, size=dim)
        score_entries[(pair_id, "raw")] = float(rng.uniform(0.1, 0.9))
        score_entries[(pair_id, "aesthetic")] = float(rng.uniform(0.2, 0.9))

    save_manifest(records, root / "manifest.jsonl")
    save_ocr(ocr_results, root / "ocr.jsonl")
    save_embeddings(vectors.astype(np.float32), root / "embeddings.bin")
    save_scores(ExternalScoreTable(entries=score_entries), root / "scores.csv")
    return info
