"""Bitmap face and glyph spotting for the reference OCR engine.

The face is a 5x7 fixed-width raster covering letters, digits and space,
drawn as string art so every shape is auditable. Rendering replicates pixels
by integer scale only — no platform fonts, no antialiasing — so renders are
bit-identical everywhere and exact template matching is possible.

Spotting inverts the renderer: binarize, split into connected components,
match each component against the scaled glyph bitmaps, then reassemble
characters into words using the fixed cell advance. It is a reference
engine for synthetic/rendered text on near-uniform backgrounds; photographic
OCR is expected to come from a real spotting model emitting the same span
schema.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GLYPH_W = 5
GLYPH_H = 7
TRACK = 1  # blank columns between adjacent glyph cells
CELL_ADVANCE = GLYPH_W + TRACK

# mismatch tolerance per classified component: 0 on clean renders, headroom
# for mild quantization if images were re-encoded lossily
MAX_MISMATCH = 0.15
MAX_SCALE = 4
MIN_CONTRAST = 16  # below this peak-to-peak gray range an image is "blank"

_FACE = {
    "a": (".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "b": ("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),
    "c": (".####", "#....", "#....", "#....", "#....", "#....", ".####"),
    "d": ("####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."),
    "e": ("#####", "#....", "#....", "###..", "#....", "#....", "#####"),
    "f": ("#####", "#....", "#....", "###..", "#....", "#....", "#...."),
    "g": (".####", "#....", "#....", "#.###", "#...#", "#...#", ".###."),
    "h": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "i": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "#####"),
    "j": ("....#", "....#", "....#", "....#", "....#", "#...#", ".###."),
    "k": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "l": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "m": ("#...#", "##.##", "#.#.#", "#...#", "#...#", "#...#", "#...#"),
    "n": ("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"),
    "o": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "p": ("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),
    "q": (".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),
    "r": ("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),
    "s": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "t": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "u": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "v": ("#...#", "#...#", "#...#", "#...#", ".#.#.", ".#.#.", "..#.."),
    "w": ("#...#", "#...#", "#...#", "#...#", "#.#.#", "##.##", "#...#"),
    "x": ("#...#", ".#.#.", ".#.#.", "..#..", ".#.#.", ".#.#.", "#...#"),
    "y": ("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),
    "z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "..##.", ".#...", "#....", "#####"),
    "3": ("#####", "....#", "...#.", "..##.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": (".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."),
    " ": (".....", ".....", ".....", ".....", ".....", ".....", "....."),
}


def face_chars() -> list[str]:
    return sorted(_FACE)


def glyph(ch: str) -> np.ndarray:
    """(7, 5) bool bitmap; unknown codepoints raise."""
    rows = _FACE.get(ch.lower())
    if rows is None:
        raise ValueError(f"no glyph for {ch!r}")
    return np.array([[c == "#" for c in row] for row in rows], dtype=bool)


def text_extent(text: str, scale: int = 1) -> tuple[int, int]:
    """(width, height) in pixels; the trailing track column is dropped."""
    if not text:
        return 0, 0
    return (len(text) * CELL_ADVANCE - TRACK) * scale, GLYPH_H * scale


def draw_text(pixels: np.ndarray, text: str, x: int, y: int, color, scale: int = 1) -> None:
    """Stamp text onto an (h, w, 3) uint8 array in place; clips at edges."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    h, w = pixels.shape[:2]
    color = np.asarray(color, dtype=np.uint8)
    for idx, ch in enumerate(text.lower()):
        cell = np.kron(glyph(ch), np.ones((scale, scale), dtype=bool))
        x0 = x + idx * CELL_ADVANCE * scale
        for dy, dx in np.argwhere(cell):
            px, py = x0 + int(dx), y + int(dy)
            if 0 <= py < h and 0 <= px < w:
                pixels[py, px] = color


# ---------------------------------------------------------------------------
# spotting


@dataclass
class SpottedWord:
    text: str
    x0: int         # cell-origin coordinates of the first glyph
    y0: int
    scale: int
    mismatch: float  # mean fraction of wrong pixels over the word's glyphs


def _bbox_crop(bitmap: np.ndarray) -> tuple[np.ndarray, int, int]:
    ys, xs = np.nonzero(bitmap)
    return bitmap[ys.min():ys.max() + 1, xs.min():xs.max() + 1], int(ys.min()), int(xs.min())


# templates keyed by (bbox_h, bbox_w) so a component's exact size prunes the
# candidate set; space is invisible and has no template
_TEMPLATES: dict[tuple[int, int], list[tuple[str, np.ndarray, int, int]]] = {}
for _ch in face_chars():
    if _ch == " ":
        continue
    _crop, _oy, _ox = _bbox_crop(glyph(_ch))
    _TEMPLATES.setdefault(_crop.shape, []).append((_ch, _crop, _oy, _ox))


def _components(mask: np.ndarray) -> list[np.ndarray]:
    """8-connected components as boolean masks, via BFS flood fill."""
    h, w = mask.shape
    seen = np.zeros_like(mask)
    out = []
    for sy, sx in np.argwhere(mask):
        if seen[sy, sx]:
            continue
        stack = [(int(sy), int(sx))]
        seen[sy, sx] = True
        member = np.zeros_like(mask)
        while stack:
            y, x = stack.pop()
            member[y, x] = True
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        stack.append((ny, nx))
        out.append(member)
    return out


def _classify(component: np.ndarray) -> tuple[str, int, int, int, float] | None:
    """Best (char, cell_y, cell_x, scale, mismatch) for one component."""
    crop, oy, ox = _bbox_crop(component)
    ch_, cw = crop.shape
    best = None
    for scale in range(1, MAX_SCALE + 1):
        if ch_ % scale or cw % scale:
            continue
        for name, tmpl, toy, tox in _TEMPLATES.get((ch_ // scale, cw // scale), ()):
            scaled = np.kron(tmpl, np.ones((scale, scale), dtype=bool))
            mism = float(np.count_nonzero(scaled ^ crop)) / scaled.size
            if mism > MAX_MISMATCH:
                continue
            key = (mism, -scale, name)
            if best is None or key < best[0]:
                best = (key, (name, oy - toy * scale, ox - tox * scale, scale, mism))
    return None if best is None else best[1]


def spot_words(pixels: np.ndarray) -> list[SpottedWord]:
    """Find rendered words; deterministic top-to-bottom, left-to-right order."""
    gray = pixels.astype(np.float64).mean(axis=2) if pixels.ndim == 3 else pixels.astype(np.float64)
    lo, hi = float(gray.min()), float(gray.max())
    if hi - lo < MIN_CONTRAST:
        return []
    thr = (lo + hi) / 2.0
    dark, light = gray < thr, gray > thr
    # text is the minority population on a near-uniform background
    mask = dark if dark.sum() <= light.sum() else light

    chars = []
    for component in _components(mask):
        hit = _classify(component)
        if hit is not None:
            chars.append(hit)
    chars.sort(key=lambda c: (c[1], c[2]))  # (cell_y, cell_x)

    # cluster into lines by cell_y, then split lines into words wherever the
    # advance exceeds one empty cell (a rendered space spans two advances)
    words: list[SpottedWord] = []
    used = [False] * len(chars)
    for i, (name, cy, cx, scale, mism) in enumerate(chars):
        if used[i]:
            continue
        line = [(name, cy, cx, scale, mism)]
        used[i] = True
        for j in range(i + 1, len(chars)):
            if used[j]:
                continue
            nname, ny, nx, nscale, nmism = chars[j]
            if nscale == scale and abs(ny - cy) <= scale:
                line.append((nname, ny, nx, nscale, nmism))
                used[j] = True
        line.sort(key=lambda c: c[2])
        start = 0
        for k in range(1, len(line) + 1):
            gap_break = (
                k == len(line)
                or line[k][2] - line[k - 1][2] > int(CELL_ADVANCE * 1.5) * scale
            )
            if gap_break:
                run = line[start:k]
                words.append(SpottedWord(
                    text="".join(c[0] for c in run),
                    x0=run[0][2], y0=min(c[1] for c in run), scale=scale,
                    mismatch=sum(c[4] for c in run) / len(run),
                ))
                start = k
    words.sort(key=lambda w: (w.y0, w.x0))
    return words
