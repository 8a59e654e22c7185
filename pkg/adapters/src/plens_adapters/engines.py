"""Reference model engines behind the export scripts.

Each engine is deterministic and CPU-only so exports are reproducible
bit-for-bit; real neural models can replace any of them as long as the
exported files keep the same interchange schemas. Engines are selected by
model identifier strings:

- embeddings:  ``grid<g>``        g x g cell-mean vector, L2-normalized
- OCR:         ``glyph5x7``       bitmap-face template spotting
- similarity:  ``cosine-grid<g>`` cosine between image and caption vectors
- aesthetic:   ``contrast-v1``    contrast/mid-tone heuristic in [0, 1]
"""

from __future__ import annotations

import hashlib
import re

import numpy as np
from PIL import Image

from .formats import Span
from .glyphs import GLYPH_H, GLYPH_W, spot_words, text_extent


def load_rgb(path) -> np.ndarray:
    """(h, w, 3) uint8 pixels; any PIL-readable input, normalized to RGB."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def _gray01(pixels: np.ndarray) -> np.ndarray:
    return pixels.astype(np.float64).mean(axis=2) / 255.0


class GridStatEmbedder:
    """Mean brightness over a g x g grid, L2-normalized, float32."""

    def __init__(self, grid: int):
        if grid < 1:
            raise ValueError("grid must be >= 1")
        self.grid = grid
        self.name = f"grid{grid}"

    @property
    def dim(self) -> int:
        return self.grid * self.grid

    def embed(self, pixels: np.ndarray) -> np.ndarray:
        gray = _gray01(pixels)
        h, w = gray.shape
        if h < self.grid or w < self.grid:
            raise ValueError(f"image {w}x{h} smaller than the {self.grid}x{self.grid} grid")
        ys = np.linspace(0, h, self.grid + 1, dtype=np.int64)
        xs = np.linspace(0, w, self.grid + 1, dtype=np.int64)
        cells = np.empty(self.dim, dtype=np.float64)
        for i in range(self.grid):
            for j in range(self.grid):
                cells[i * self.grid + j] = gray[ys[i]:ys[i + 1], xs[j]:xs[j + 1]].mean()
        norm = float(np.linalg.norm(cells))
        if norm > 0.0:
            cells /= norm
        return cells.astype(np.float32)


class GlyphSpotter:
    """Finds rendered words and reports them in the OCR span schema."""

    name = "glyph5x7"

    def spot(self, pixels: np.ndarray) -> list[Span]:
        spans = []
        for word in spot_words(pixels):
            width, height = text_extent(word.text, word.scale)
            x0, y0 = float(word.x0), float(word.y0)
            poly = [
                (x0, y0),
                (x0 + width, y0),
                (x0 + width, y0 + height),
                (x0, y0 + height),
            ]
            conf = min(1.0, max(0.0, 1.0 - word.mismatch))
            spans.append(Span(poly=poly, text=word.text, conf=conf))
        return spans


def _token_vector(token: str, dim: int) -> np.ndarray:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    return rng.normal(size=dim)


class CosineSimilarity:
    """Cosine between the grid embedding and a hashed bag-of-words vector."""

    def __init__(self, grid: int):
        self.embedder = GridStatEmbedder(grid)
        self.name = f"cosine-grid{grid}"

    def score(self, pixels: np.ndarray, caption: str) -> float:
        image_vec = self.embedder.embed(pixels).astype(np.float64)
        tokens = sorted(set(re.findall(r"[a-z0-9]+", caption.lower())))
        if not tokens:
            return 0.0
        text_vec = np.zeros(self.embedder.dim, dtype=np.float64)
        for token in tokens:
            text_vec += _token_vector(token, self.embedder.dim)
        text_norm = float(np.linalg.norm(text_vec))
        image_norm = float(np.linalg.norm(image_vec))
        if text_norm == 0.0 or image_norm == 0.0:
            return 0.0
        value = float(image_vec @ text_vec / (image_norm * text_norm))
        return min(1.0, max(-1.0, value))


class ContrastAesthetic:
    """Rewards contrast and mid-tone exposure; always lands in [0, 1]."""

    name = "contrast-v1"

    def score(self, pixels: np.ndarray) -> float:
        gray = _gray01(pixels)
        contrast = min(1.0, 2.0 * float(gray.std()))
        balance = max(0.0, 1.0 - 2.0 * abs(float(gray.mean()) - 0.5))
        return min(1.0, max(0.0, 0.6 * contrast + 0.4 * balance))


_GRID_RE = re.compile(r"^grid(\d+)$")
_COSINE_RE = re.compile(r"^cosine-grid(\d+)$")


def make_embedder(model: str) -> GridStatEmbedder:
    m = _GRID_RE.match(model)
    if not m:
        raise ValueError(f"unknown embedding model '{model}' (expected grid<g>)")
    return GridStatEmbedder(int(m.group(1)))


def make_spotter(model: str) -> GlyphSpotter:
    if model != GlyphSpotter.name:
        raise ValueError(f"unknown OCR model '{model}' (expected {GlyphSpotter.name})")
    return GlyphSpotter()


def make_similarity(model: str) -> CosineSimilarity:
    m = _COSINE_RE.match(model)
    if not m:
        raise ValueError(f"unknown similarity model '{model}' (expected cosine-grid<g>)")
    return CosineSimilarity(int(m.group(1)))


def make_aesthetic(model: str) -> ContrastAesthetic:
    if model != ContrastAesthetic.name:
        raise ValueError(f"unknown aesthetic model '{model}' (expected {ContrastAesthetic.name})")
    return ContrastAesthetic()


__all__ = [
    "ContrastAesthetic",
    "CosineSimilarity",
    "GlyphSpotter",
    "GridStatEmbedder",
    "load_rgb",
    "make_aesthetic",
    "make_embedder",
    "make_similarity",
    "make_spotter",
    "GLYPH_H",
    "GLYPH_W",
]
