"""Embedded fixed-width bitmap face used for synthetic text rendering.

Glyphs are 5x7 cells drawn as string art so the raster is auditable in the
source. The face covers lowercase letters (drawn as capitals), digits and the
space; anything else renders as a hollow box. Scaling is integer pixel
replication only, which keeps renders crisp and bit-identical everywhere:
there is no platform font stack, no hinting and no antialiasing to drift.

"Font size" means the scaled cell height in pixels. The base cell is 8 px
tall (7 glyph rows plus 1 padding row), so legal sizes are multiples of 8.
"""

from __future__ import annotations

import numpy as np

GLYPH_WIDTH = 5
GLYPH_HEIGHT = 7
CELL_WIDTH = GLYPH_WIDTH + 1   # one blank column between glyphs
CELL_HEIGHT = GLYPH_HEIGHT + 1  # one blank row below the glyph line
BASE_SIZE = CELL_HEIGHT         # font size at scale 1

_GLYPHS = {
    "a": (".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "b": ("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),
    "c": (".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."),
    "d": ("####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."),
    "e": ("#####", "#....", "#....", "####.", "#....", "#....", "#####"),
    "f": ("#####", "#....", "#....", "####.", "#....", "#....", "#...."),
    "g": (".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."),
    "h": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "i": (".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "j": ("..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "k": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "l": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "m": ("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),
    "n": ("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"),
    "o": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "p": ("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),
    "q": (".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),
    "r": ("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),
    "s": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "t": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "u": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "v": ("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "w": ("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"),
    "x": ("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),
    "y": ("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),
    "z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    "3": (".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": (".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."),
    " ": (".....", ".....", ".....", ".....", ".....", ".....", "....."),
}

_FALLBACK = ("#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#####")


def glyph_bitmap(ch: str) -> np.ndarray:
    """(7, 5) bool array for one codepoint; unknown codepoints box-fallback."""
    rows = _GLYPHS.get(ch, _FALLBACK)
    return np.array([[c == "#" for c in row] for row in rows], dtype=bool)


def known_glyphs() -> list[str]:
    return sorted(_GLYPHS)


def text_extent(text: str, scale: int = 1) -> tuple[int, int]:
    """(width, height) in pixels of rendered text; trailing spacing dropped."""
    if not text:
        return 0, 0
    width = (len(text) * CELL_WIDTH - 1) * scale
    return width, GLYPH_HEIGHT * scale


def render_text_mask(text: str, scale: int = 1) -> np.ndarray:
    """Boolean raster of the text at integer scale, tight to the extent."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    width, height = text_extent(text, scale)
    mask = np.zeros((height, width), dtype=bool)
    for i, ch in enumerate(text):
        bitmap = glyph_bitmap(ch)
        if scale > 1:
            bitmap = np.repeat(np.repeat(bitmap, scale, axis=0), scale, axis=1)
        x0 = i * CELL_WIDTH * scale
        mask[:, x0 : x0 + GLYPH_WIDTH * scale] |= bitmap
    return mask


def draw_text(pixels: np.ndarray, text: str, x: int, y: int, color, scale: int = 1) -> None:
    """Stamp text onto an (h, w, c) uint8 array with top-left corner (x, y).

    Parts falling outside the frame are clipped silently.
    """
    mask = render_text_mask(text, scale)
    h, w = mask.shape
    y0, x0 = max(0, y), max(0, x)
    y1, x1 = min(pixels.shape[0], y + h), min(pixels.shape[1], x + w)
    if y0 >= y1 or x0 >= x1:
        return
    window = mask[y0 - y : y1 - y, x0 - x : x1 - x]
    region = pixels[y0:y1, x0:x1]
    region[window] = np.asarray(color, dtype=np.uint8)
