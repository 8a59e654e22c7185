"""Pixel-plane geometry: image buffers, polygon area, rasterization.

Rasterization uses even-odd scanline filling with the pixel-center rule: pixel
(x, y) is covered iff the point (x + 0.5, y + 0.5) lies inside the polygon.
Scanlines sit at half-integer y, so polygons with integer vertices never put a
vertex exactly on a scanline and the fill is unambiguous. Self-intersecting
OCR quads are legal input and fill by parity, matching the area a detector
actually highlighted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

Polygon = Sequence[Sequence[float]]


@dataclass
class ImageBuffer:
    """Interleaved uint8 raster, (height, width, channels), 1 or 3 channels."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.pixels.ndim == 2:
            self.pixels = self.pixels[:, :, None]
        if self.pixels.ndim != 3 or self.pixels.shape[2] not in (1, 3):
            raise ValueError("pixels must be (h, w, c) with 1 or 3 channels")
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be uint8")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def channels(self) -> int:
        return int(self.pixels.shape[2])

    def copy(self) -> "ImageBuffer":
        return ImageBuffer(self.pixels.copy())

    @classmethod
    def blank(cls, width: int, height: int, channels: int = 3, fill: int = 0) -> "ImageBuffer":
        return cls(np.full((height, width, channels), fill, dtype=np.uint8))

    @classmethod
    def from_png(cls, path: str | Path) -> "ImageBuffer":
        with Image.open(path) as img:
            if img.mode == "L":
                return cls(np.asarray(img, dtype=np.uint8).copy())
            return cls(np.asarray(img.convert("RGB"), dtype=np.uint8).copy())

    def to_png(self, path: str | Path) -> None:
        if self.channels == 1:
            Image.fromarray(self.pixels[:, :, 0], mode="L").save(path, format="PNG")
        else:
            Image.fromarray(self.pixels, mode="RGB").save(path, format="PNG")


def polygon_area(points: Polygon) -> float:
    """Unsigned shoelace area; orientation does not matter."""
    n = len(points)
    if n < 3:
        raise ValueError("polygon needs at least 3 points")
    acc = 0.0
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2.0


def rasterize_polygons(polygons: Sequence[Polygon], width: int, height: int) -> np.ndarray:
    """Union mask of even-odd filled polygons; out-of-frame parts are clipped."""
    mask = np.zeros((height, width), dtype=bool)
    for poly in polygons:
        if len(poly) < 3:
            raise ValueError("polygon needs at least 3 points")
        ys = [p[1] for p in poly]
        row_lo = max(0, int(math.floor(min(ys) - 0.5)))
        row_hi = min(height - 1, int(math.ceil(max(ys))))
        edges = [(poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))]
        for row in range(row_lo, row_hi + 1):
            yc = row + 0.5
            xs: list[float] = []
            for (x1, y1), (x2, y2) in edges:
                if (y1 > yc) != (y2 > yc):
                    xs.append(x1 + (yc - y1) * (x2 - x1) / (y2 - y1))
            if not xs:
                continue
            xs.sort()
            for i in range(0, len(xs) - 1, 2):
                # pixel centers x+0.5 in [xs[i], xs[i+1])
                start = max(0, math.ceil(xs[i] - 0.5))
                stop = min(width, math.ceil(xs[i + 1] - 0.5))
                if start < stop:
                    mask[row, start:stop] = True
    return mask


def dilate_mask(mask: np.ndarray, px: int) -> np.ndarray:
    """Chebyshev (8-neighbour) dilation by px pixels."""
    if px < 0:
        raise ValueError("dilation must be non-negative")
    out = mask.copy()
    for _ in range(px):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        grown[1:, 1:] |= out[:-1, :-1]
        grown[1:, :-1] |= out[:-1, 1:]
        grown[:-1, 1:] |= out[1:, :-1]
        grown[:-1, :-1] |= out[1:, 1:]
        out = grown
    return out
