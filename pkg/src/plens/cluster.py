"""Embedding-space reduction and clustering.

PCA is fit in a single pass over batches by accumulating the running sum and
second moment, then eigendecomposing the dim x dim covariance. That keeps
memory at O(batch*dim + dim^2) without ever materializing the full data
matrix, and unlike truncated incremental updates it is exact: the result
matches a dense eigensolver to machine precision regardless of batch size.

K-Means is Lloyd's algorithm with k-means++ seeding, a fixed number of
restarts (lowest inertia wins) and a splitmix64-derived sub-seed per restart,
so a (data, k, seed) triple reproduces bitwise. Distances and centroid
updates run in float64 regardless of input dtype; assignment ties break
toward the lowest centroid index; a cluster that empties is reseeded to the
point currently farthest from its assigned centroid, which never increases
inertia.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .ingest import EmbeddingMatrix, FormatError
from .seeds import splitmix_stream

KMEANS_MAGIC = b"PLKM"
KMEANS_VERSION = 1

DEFAULT_ITERS = 300
DEFAULT_RESTARTS = 10


@dataclass
class PcaModel:
    mean: np.ndarray                # (dim,)
    components: np.ndarray          # (out_dim, dim), orthonormal rows
    explained_variance: np.ndarray  # (out_dim,), descending


@dataclass
class KmeansModel:
    centroids: np.ndarray  # (k, dim) float64
    inertia: float

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])


def _as_array(data) -> np.ndarray:
    if isinstance(data, EmbeddingMatrix):
        return data.vectors
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise ValueError("data must be a 2-d array")
    return arr


def fit_pca(data, out_dim: int, batch: int = 4096) -> PcaModel:
    """Fit mean-centered principal components, descending explained variance."""
    arr = _as_array(data)
    n, dim = arr.shape
    if out_dim < 1 or out_dim > dim:
        raise ValueError(f"out_dim {out_dim} must be in [1, dim={dim}]")
    if n < out_dim:
        raise ValueError(f"need at least out_dim={out_dim} rows, got {n}")
    if batch < out_dim:
        raise ValueError(f"batch {batch} must be >= out_dim {out_dim}")

    total = np.zeros(dim, dtype=np.float64)
    scatter = np.zeros((dim, dim), dtype=np.float64)
    for start in range(0, n, batch):
        chunk = arr[start : start + batch].astype(np.float64)
        total += chunk.sum(axis=0)
        scatter += chunk.T @ chunk

    mean = total / n
    cov = scatter / n - np.outer(mean, mean)
    cov = (cov + cov.T) / 2.0  # exact symmetry for eigh
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:out_dim]
    components = evecs[:, order].T.copy()
    variance = evals[order].copy()

    # deterministic sign: the largest-magnitude coefficient of each row is
    # made positive, so repeated fits agree bit-for-bit
    for row in components:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, explained_variance=variance)


def transform_pca(model: PcaModel, data) -> np.ndarray:
    arr = _as_array(data)
    if arr.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"data dim {arr.shape[1]} does not match model dim {model.mean.shape[0]}"
        )
    return (arr.astype(np.float64) - model.mean) @ model.components.T


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    p2 = (points * points).sum(axis=1)[:, None]
    c2 = (centroids * centroids).sum(axis=1)[None, :]
    d2 = p2 + c2 - 2.0 * points @ centroids.T
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(k - 1):
        total = float(d2.sum())
        if total > 0.0:
            u = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), u, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))  # every point already covered
        chosen.append(idx)
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return points[chosen].copy()


def fit_kmeans(
    data,
    k: int,
    iters: int = DEFAULT_ITERS,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    on_iteration: Callable[[int, int, float], None] | None = None,
) -> KmeansModel:
    """Best-of-restarts Lloyd's. on_iteration(restart, iteration, inertia)."""
    points = _as_array(data).astype(np.float64)
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds number of points n={n}")
    if iters < 1 or restarts < 1:
        raise ValueError("iters and restarts must be >= 1")

    best: KmeansModel | None = None
    for restart in range(restarts):
        rng = np.random.default_rng(splitmix_stream(seed, restart))
        centroids = _kmeans_pp(points, k, rng)
        inertia = float("inf")
        moved = False
        for iteration in range(iters):
            d2 = _squared_distances(points, centroids)
            labels = d2.argmin(axis=1)
            point_d2 = d2[np.arange(n), labels]
            inertia = float(point_d2.sum())
            if on_iteration is not None:
                on_iteration(restart, iteration, inertia)

            new_centroids = centroids.copy()
            counts = np.bincount(labels, minlength=k)
            sums = np.zeros_like(centroids)
            np.add.at(sums, labels, points)
            nonempty = counts > 0
            new_centroids[nonempty] = sums[nonempty] / counts[nonempty, None]

            if not nonempty.all():
                # reseed each empty cluster to the farthest remaining point
                spare = point_d2.copy()
                for j in np.flatnonzero(~nonempty):
                    far = int(spare.argmax())
                    new_centroids[j] = points[far]
                    spare[far] = -1.0

            if np.array_equal(new_centroids, centroids):
                moved = False
                break
            centroids = new_centroids
            moved = True

        if moved:
            # iteration budget ran out with a pending update; re-measure so the
            # reported inertia matches the returned centroids
            d2 = _squared_distances(points, centroids)
            inertia = float(d2.min(axis=1).sum())

        if best is None or inertia < best.inertia:
            best = KmeansModel(centroids=centroids, inertia=inertia)
    assert best is not None
    return best


def assign(model: KmeansModel, data) -> np.ndarray:
    """Nearest-centroid labels; equidistant points take the lowest index."""
    points = _as_array(data).astype(np.float64)
    if points.shape[1] != model.dim:
        raise ValueError(f"data dim {points.shape[1]} does not match model dim {model.dim}")
    return _squared_distances(points, model.centroids).argmin(axis=1)


def merge_clusters(model: KmeansModel, target_k: int, seed: int = 0,
                   iters: int = DEFAULT_ITERS, restarts: int = DEFAULT_RESTARTS):
    """Cluster the centroids themselves; returns (merged model, label map).

    The label map sends each source cluster index to its merged cluster.
    target_k == k yields a pure relabeling when centroids are distinct.
    """
    if target_k > model.k:
        raise ValueError(f"target_k {target_k} exceeds current k {model.k}")
    merged = fit_kmeans(model.centroids, target_k, iters=iters, restarts=restarts, seed=seed)
    mapping = assign(merged, model.centroids)
    return merged, mapping


PCA_MAGIC = b"PLPC"
PCA_VERSION = 1


def save_pca(model: PcaModel, path: str | Path) -> None:
    out_dim, dim = model.components.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", PCA_MAGIC, PCA_VERSION, dim, out_dim))
        fh.write(np.ascontiguousarray(model.mean, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.components, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.explained_variance, dtype="<f8").tobytes())


def load_pca(path: str | Path) -> PcaModel:
    raw = Path(path).read_bytes()
    header = struct.calcsize("<4sIII")
    if len(raw) < header:
        raise FormatError("pca model file truncated header")
    magic, version, dim, out_dim = struct.unpack_from("<4sIII", raw, 0)
    if magic != PCA_MAGIC:
        raise FormatError(f"pca model has bad magic {magic!r}")
    if version != PCA_VERSION:
        raise FormatError(f"pca model has unsupported version {version}")
    expected = header + 8 * (dim + out_dim * dim + out_dim)
    if len(raw) != expected:
        raise FormatError(f"pca model truncated: expected {expected} bytes, found {len(raw)}")
    mean = np.frombuffer(raw, dtype="<f8", count=dim, offset=header)
    components = np.frombuffer(raw, dtype="<f8", count=out_dim * dim, offset=header + 8 * dim)
    variance = np.frombuffer(raw, dtype="<f8", count=out_dim, offset=header + 8 * (dim + out_dim * dim))
    return PcaModel(
        mean=mean.copy(),
        components=components.reshape(out_dim, dim).copy(),
        explained_variance=variance.copy(),
    )


def save_kmeans(model: KmeansModel, path: str | Path) -> None:
    centroids = np.ascontiguousarray(model.centroids, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", KMEANS_MAGIC, KMEANS_VERSION, model.k, model.dim))
        fh.write(centroids.tobytes())


def load_kmeans(path: str | Path) -> KmeansModel:
    raw = Path(path).read_bytes()
    header = struct.calcsize("<4sIII")
    if len(raw) < header:
        raise FormatError("kmeans model file truncated header")
    magic, version, k, dim = struct.unpack_from("<4sIII", raw, 0)
    if magic != KMEANS_MAGIC:
        raise FormatError(f"kmeans model has bad magic {magic!r}")
    if version != KMEANS_VERSION:
        raise FormatError(f"kmeans model has unsupported version {version}")
    expected = header + k * dim * 4
    if len(raw) != expected:
        raise FormatError(f"kmeans model truncated: expected {expected} bytes, found {len(raw)}")
    centroids = np.frombuffer(raw, dtype="<f4", count=k * dim, offset=header)
    return KmeansModel(centroids=centroids.reshape(k, dim).astype(np.float64), inertia=float("nan"))
