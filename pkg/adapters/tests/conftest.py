"""Shared 10-image fixture: rendered words, text-free images, manifest."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from plens_adapters.glyphs import draw_text


def _save(pixels: np.ndarray, path: Path) -> None:
    Image.fromarray(pixels, mode="RGB").save(path)


def _canvas(h: int, w: int, level: int) -> np.ndarray:
    return np.full((h, w, 3), level, dtype=np.uint8)


# id -> (caption, [(word, x, y, scale, dark)]); empty list = text-free image
PLANTED = {
    "img00": ("plain wall and sky", []),
    "img01": ("smooth ramp of light", []),
    "img02": ("static noise field", []),
    "img03": ("a red stop sign", [("stop", 10, 12, 2, True)]),
    "img04": ("restaurant board tonight", [("menu", 6, 8, 1, False)]),
    "img05": ("shop open late", [("open", 4, 20, 1, True), ("late", 40, 20, 1, True)]),
    "img06": ("window with sale banner", [("sale", 8, 10, 3, True)]),
    "img07": ("city taxi cab", [("taxi", 12, 6, 2, True), ("cab7", 12, 30, 2, True)]),
    "img08": ("green exit lamp", [("exit", 5, 5, 1, False)]),
    "img09": ("number 42 on a door", [("42", 20, 16, 2, True)]),
}


def build_fixture(root: Path) -> dict[str, list[str]]:
    """Write images + manifest; returns id -> planted word list."""
    images = root / "images"
    images.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(4242)
    planted: dict[str, list[str]] = {}
    lines = []
    for pair_id, (caption, words) in PLANTED.items():
        if pair_id == "img01":
            col = (60 + np.arange(96) * 1.5).astype(np.uint8)
            pixels = np.tile(col, (64, 1))[:, :, None].repeat(3, axis=2).copy()
        elif pair_id == "img02":
            pixels = rng.integers(0, 256, size=(64, 96, 3)).astype(np.uint8)
        else:
            level = 215 if any(dark for *_x, dark in words) or not words else 45
            pixels = _canvas(64, 96, level)
        for word, x, y, scale, dark in words:
            color = (25, 25, 30) if dark else (235, 235, 230)
            draw_text(pixels, word, x, y, color, scale=scale)
        planted[pair_id] = [w for w, *_ in words]
        _save(pixels, images / f"{pair_id}.png")
        lines.append(json.dumps(
            {"id": pair_id, "image": f"images/{pair_id}.png", "caption": caption},
            ensure_ascii=False, separators=(",", ":"),
        ))
    (root / "manifest.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return planted


def build_variants(root: Path, ids: list[str]) -> Path:
    """Five deterministic variant images per id, as the pipeline lays them out."""
    variants = root / "variants"
    variants.mkdir(parents=True, exist_ok=True)
    for i, pair_id in enumerate(ids):
        for j, tag in enumerate(("raw", "all_removed", "co_removed", "rand_all", "rand_co")):
            base = _canvas(48, 48, 70 + 12 * i + 8 * j)
            base[8:24, 8:40] = 190 - 9 * j  # block so contrast varies per variant
            _save(base, variants / f"{pair_id}.{tag}.png")
    return variants


@pytest.fixture(scope="session")
def fixture_ws(tmp_path_factory):
    root = tmp_path_factory.mktemp("adapters") / "ws"
    planted = build_fixture(root)
    return root, planted
