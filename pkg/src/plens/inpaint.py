"""Fast-marching (Telea) inpainting and text-removal image variants.

The front starts at the mask boundary and marches inward in non-decreasing
Eikonal distance T (|grad T| = 1). Each hole pixel, when first reached, is
painted as a weighted average of the already-valued pixels inside `radius`,
with the classic three factors: direction (alignment of the neighbour with
the front normal grad T), geometric distance, and level-set proximity
(|T(p) - T(q)|). Neighbour values are extrapolated first-order along their
own image gradient, which is what lets linear ramps re-appear inside the
hole; the extrapolation can overshoot, so results clamp to [0, 255].

Everything is fixed-order arithmetic: offsets scan row-major, the heap breaks
distance ties by (row, col), and no randomness is involved, so a given
(image, mask, radius) triple yields identical bytes on every run.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .geometry import ImageBuffer, dilate_mask, rasterize_polygons
from .ingest import OcrResult
from .textmatch import CoMatch, tokenize

DEFAULT_RADIUS = 3.0

_KNOWN, _BAND, _INSIDE = 0, 1, 2
_FAR = 1.0e6


def _solve(t1: float, v1: bool, t2: float, v2: bool) -> float:
    """Quadrant solution of |grad T| = 1 from up to two finalized neighbours."""
    if v1 and v2:
        d = t1 - t2
        if abs(d) < 1.0:
            return (t1 + t2 + math.sqrt(2.0 - d * d)) / 2.0
        return min(t1, t2) + 1.0
    if v1:
        return t1 + 1.0
    if v2:
        return t2 + 1.0
    return _FAR


def _disc_offsets(radius: float) -> np.ndarray:
    r = int(math.floor(radius))
    offs = [
        (dy, dx)
        for dy in range(-r, r + 1)
        for dx in range(-r, r + 1)
        if (dy or dx) and dy * dy + dx * dx <= radius * radius
    ]
    return np.array(offs, dtype=np.int64)


def inpaint_telea(
    image: ImageBuffer,
    mask: np.ndarray,
    radius: float = DEFAULT_RADIUS,
    on_pop: Callable[[float], None] | None = None,
) -> ImageBuffer:
    """Fill masked pixels; unmasked pixels come back bit-identical.

    `on_pop` is an instrumentation hook called with the distance of every
    pixel the front finalizes, in pop order.
    """
    h, w = image.height, image.width
    if mask.shape != (h, w):
        raise ValueError("mask shape must match image")
    if radius < 1.0:
        raise ValueError("radius must be >= 1")
    mask = mask.astype(bool)
    if not mask.any():
        return image.copy()
    if mask.all():
        raise ValueError("mask covers the entire image; no known pixels to inpaint from")

    flags = np.where(mask, _INSIDE, _KNOWN).astype(np.int8)
    dist = np.where(mask, _FAR, 0.0)

    # Known pixels touching the hole form the initial zero-distance band.
    ring = ~mask & dilate_mask(mask, 1)
    flags[ring] = _BAND
    heap: list[tuple[float, int, int]] = [(0.0, int(y), int(x)) for y, x in np.argwhere(ring)]
    heapq.heapify(heap)

    out = image.pixels.astype(np.float64)
    channels = image.channels
    offs = _disc_offsets(radius)
    off_y, off_x = offs[:, 0], offs[:, 1]
    off_len2 = (off_y * off_y + off_x * off_x).astype(np.float64)
    off_len = np.sqrt(off_len2)

    def paint(py: int, px: int) -> None:
        ys = py + off_y
        xs = px + off_x
        inside_frame = (ys >= 0) & (ys < h) & (xs >= 0) & (xs < w)
        ys_c = np.clip(ys, 0, h - 1)
        xs_c = np.clip(xs, 0, w - 1)
        valued = inside_frame & (flags[ys_c, xs_c] != _INSIDE)
        if not valued.any():
            return

        # front normal at p from one-sided/central differences over valued T
        def t_at(y: int, x: int) -> tuple[float, bool]:
            if 0 <= y < h and 0 <= x < w and flags[y, x] != _INSIDE:
                return float(dist[y, x]), True
            return 0.0, False

        tp = float(dist[py, px])
        txm, vxm = t_at(py, px - 1)
        txp, vxp = t_at(py, px + 1)
        tym, vym = t_at(py - 1, px)
        typ_, vyp = t_at(py + 1, px)
        if vxm and vxp:
            grad_tx = (txp - txm) / 2.0
        elif vxp:
            grad_tx = txp - tp
        elif vxm:
            grad_tx = tp - txm
        else:
            grad_tx = 0.0
        if vym and vyp:
            grad_ty = (typ_ - tym) / 2.0
        elif vyp:
            grad_ty = typ_ - tp
        elif vym:
            grad_ty = tp - tym
        else:
            grad_ty = 0.0

        qy = ys_c[valued]
        qx = xs_c[valued]
        ry = -off_y[valued].astype(np.float64)  # r = p - q
        rx = -off_x[valued].astype(np.float64)
        rlen = off_len[valued]
        rlen2 = off_len2[valued]

        direction = (rx * grad_tx + ry * grad_ty) / rlen
        direction = np.where(np.abs(direction) <= 1.0e-2, 1.0e-6, direction)
        dst = 1.0 / rlen2
        lev = 1.0 / (1.0 + np.abs(tp - dist[qy, qx]))
        weight = np.abs(direction) * dst * lev
        total = float(weight.sum())
        if total <= 0.0:
            weight = np.ones_like(weight)
            total = float(weight.sum())

        # per-neighbour image gradient, masked against unknown pixels
        def grad_along(axis_y: int, axis_x: int) -> np.ndarray:
            fy = qy + axis_y
            fx = qx + axis_x
            by = qy - axis_y
            bx = qx - axis_x
            f_ok = (fy >= 0) & (fy < h) & (fx >= 0) & (fx < w)
            f_ok &= flags[np.clip(fy, 0, h - 1), np.clip(fx, 0, w - 1)] != _INSIDE
            b_ok = (by >= 0) & (by < h) & (bx >= 0) & (bx < w)
            b_ok &= flags[np.clip(by, 0, h - 1), np.clip(bx, 0, w - 1)] != _INSIDE
            fy, fx = np.clip(fy, 0, h - 1), np.clip(fx, 0, w - 1)
            by, bx = np.clip(by, 0, h - 1), np.clip(bx, 0, w - 1)
            vals_f = out[fy, fx]
            vals_b = out[by, bx]
            vals_q = out[qy, qx]
            both = (f_ok & b_ok)[:, None]
            fwd = (f_ok & ~b_ok)[:, None]
            bwd = (b_ok & ~f_ok)[:, None]
            return (
                both * (vals_f - vals_b) / 2.0
                + fwd * (vals_f - vals_q)
                + bwd * (vals_q - vals_b)
            )

        grad_ix = grad_along(0, 1)
        grad_iy = grad_along(1, 0)
        contrib = out[qy, qx] + grad_ix * rx[:, None] + grad_iy * ry[:, None]
        value = (weight[:, None] * contrib).sum(axis=0) / total
        out[py, px, :channels] = np.clip(value, 0.0, 255.0)

    while heap:
        t, y, x = heapq.heappop(heap)
        if flags[y, x] == _KNOWN or t > dist[y, x]:
            continue
        flags[y, x] = _KNOWN
        if on_pop is not None:
            on_pop(t)
        for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if not (0 <= ny < h and 0 <= nx < w) or flags[ny, nx] != _INSIDE:
                continue

            def known_t(ky: int, kx: int) -> tuple[float, bool]:
                if 0 <= ky < h and 0 <= kx < w and flags[ky, kx] == _KNOWN:
                    return float(dist[ky, kx]), True
                return 0.0, False

            l, lv = known_t(ny, nx - 1)
            r_, rv = known_t(ny, nx + 1)
            u, uv = known_t(ny - 1, nx)
            d, dv = known_t(ny + 1, nx)
            new_t = min(
                _solve(l, lv, u, uv),
                _solve(r_, rv, u, uv),
                _solve(l, lv, d, dv),
                _solve(r_, rv, d, dv),
            )
            dist[ny, nx] = new_t
            paint(ny, nx)
            flags[ny, nx] = _BAND
            heapq.heappush(heap, (new_t, ny, nx))

    result = image.pixels.copy()
    rounded = np.rint(out).astype(np.int64).clip(0, 255).astype(np.uint8)
    result[mask] = rounded[mask]
    return ImageBuffer(result)


# ---------------------------------------------------------------------------
# variants
# ---------------------------------------------------------------------------

@dataclass
class VariantSet:
    raw: ImageBuffer
    all_removed: ImageBuffer
    co_removed: ImageBuffer
    rand_all: ImageBuffer
    rand_co: ImageBuffer

    def as_dict(self) -> dict[str, ImageBuffer]:
        return {
            "raw": self.raw,
            "all_removed": self.all_removed,
            "co_removed": self.co_removed,
            "rand_all": self.rand_all,
            "rand_co": self.rand_co,
        }


def co_span_indices(ocr: OcrResult, comatch: CoMatch) -> list[int]:
    """Spans whose recognized text shares a word with the caption overlap."""
    co = set(comatch.co_words)
    return [i for i, span in enumerate(ocr.spans) if co & set(tokenize(span.text))]


def _remove(image: ImageBuffer, polygons: Sequence, radius: float, dilate: int) -> ImageBuffer:
    if not polygons:
        return image.copy()
    mask = rasterize_polygons(polygons, image.width, image.height)
    if dilate:
        mask = dilate_mask(mask, dilate)
    if not mask.any():
        # degenerate polygons can cover zero pixel centers; nothing to fill
        return image.copy()
    return inpaint_telea(image, mask, radius)


def make_variants(
    image: ImageBuffer,
    ocr: OcrResult,
    comatch: CoMatch,
    donor_pool: Iterable[OcrResult],
    seed: int,
    radius: float = DEFAULT_RADIUS,
    dilate: int = 0,
) -> VariantSet:
    """Build the five scoring variants for one pair with embedded text.

    Random baselines redraw polygon sets of matching count from other images:
    for each needed polygon a donor image is drawn uniformly (never this one),
    then one of its spans uniformly, with replacement across draws. Donor
    polygons may overhang; rasterization clips them to the frame.
    """
    if ocr.id != comatch.id:
        raise ValueError(f"id mismatch: ocr '{ocr.id}' vs comatch '{comatch.id}'")
    if not ocr.spans:
        raise ValueError(f"pair '{ocr.id}' has no spans; variants are raw-only for text-free pairs")

    donors = [d for d in donor_pool if d.id != ocr.id and d.spans]
    if not donors:
        raise ValueError("donor pool has no usable images (non-self, with spans)")

    all_polys = [span.poly for span in ocr.spans]
    co_polys = [ocr.spans[i].poly for i in co_span_indices(ocr, comatch)]

    rng = np.random.default_rng(seed)

    def draw(count: int) -> list:
        polys = []
        for _ in range(count):
            donor = donors[int(rng.integers(len(donors)))]
            polys.append(donor.spans[int(rng.integers(len(donor.spans)))].poly)
        return polys

    rand_all_polys = draw(len(all_polys))
    rand_co_polys = draw(len(co_polys))

    return VariantSet(
        raw=image.copy(),
        all_removed=_remove(image, all_polys, radius, dilate),
        co_removed=_remove(image, co_polys, radius, dilate),
        rand_all=_remove(image, rand_all_polys, radius, dilate),
        rand_co=_remove(image, rand_co_polys, radius, dilate),
    )
