"""PCA against a dense eigensolver oracle; K-Means contracts and recovery."""

from __future__ import annotations

from collections import defaultdict

import numpy as np
import pytest

from plens.cluster import (
    KmeansModel,
    assign,
    fit_kmeans,
    fit_pca,
    load_kmeans,
    load_pca,
    merge_clusters,
    save_kmeans,
    save_pca,
    transform_pca,
)
from plens.ingest import FormatError

from oracles import oracle_ari, oracle_inertia, oracle_nearest, oracle_pca


def two_blobs(n_per: int = 200, dim: int = 6, seed: int = 31):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 0.5, size=(n_per, dim))
    b = rng.normal(0.0, 0.5, size=(n_per, dim)) + 10.0
    data = np.vstack([a, b]).astype(np.float32)
    truth = np.array([0] * n_per + [1] * n_per)
    return data, truth


# ---------------------------------------------------------------------------
# pca
# ---------------------------------------------------------------------------

def test_pca_matches_eigensolver_oracle_up_to_sign() -> None:
    rng = np.random.default_rng(41)
    data = rng.normal(size=(50, 8))
    model = fit_pca(data, out_dim=3, batch=16)
    _, oracle_comp, oracle_var = oracle_pca(data, 3)
    for row, expect in zip(model.components, oracle_comp):
        sign = 1.0 if float(row @ expect) >= 0 else -1.0
        assert np.allclose(row, sign * expect, atol=1e-6)
    assert np.allclose(model.explained_variance, oracle_var, atol=1e-6)


def test_pca_mean_and_orthonormal_rows() -> None:
    rng = np.random.default_rng(43)
    data = rng.normal(size=(40, 5))
    model = fit_pca(data, out_dim=4)
    assert np.allclose(model.mean, data.mean(axis=0), atol=1e-12)
    gram = model.components @ model.components.T
    assert np.allclose(gram, np.eye(4), atol=1e-5)


def test_pca_transform_variance_equals_explained() -> None:
    rng = np.random.default_rng(47)
    data = rng.normal(size=(120, 7)) * np.array([5, 3, 2, 1, 1, 0.5, 0.1])
    model = fit_pca(data, out_dim=4)
    projected = transform_pca(model, data)
    assert np.allclose(projected.var(axis=0), model.explained_variance, atol=1e-5)


def test_pca_batch_size_does_not_change_result() -> None:
    rng = np.random.default_rng(53)
    data = rng.normal(size=(64, 6))
    a = fit_pca(data, out_dim=3, batch=64)
    b = fit_pca(data, out_dim=3, batch=7)
    assert np.allclose(a.components, b.components, atol=1e-9)
    assert np.allclose(a.explained_variance, b.explained_variance, atol=1e-9)


def test_pca_error_contracts() -> None:
    data = np.zeros((10, 4))
    with pytest.raises(ValueError, match="out_dim"):
        fit_pca(data, out_dim=5)
    with pytest.raises(ValueError, match="rows"):
        fit_pca(np.zeros((2, 4)), out_dim=3)
    with pytest.raises(ValueError, match="batch"):
        fit_pca(data, out_dim=3, batch=2)
    model = fit_pca(data + np.arange(4), out_dim=2)
    with pytest.raises(ValueError, match="dim"):
        transform_pca(model, np.zeros((3, 7)))


# ---------------------------------------------------------------------------
# kmeans
# ---------------------------------------------------------------------------

def test_kmeans_recovers_two_blobs() -> None:
    data, truth = two_blobs()
    model = fit_kmeans(data, k=2, seed=7)
    labels = assign(model, data)
    assert oracle_ari(truth, labels) >= 0.99


def test_kmeans_inertia_monotone_every_restart() -> None:
    data, _ = two_blobs(n_per=80)
    history: dict[int, list[float]] = defaultdict(list)
    fit_kmeans(data, k=5, seed=3, on_iteration=lambda r, i, v: history[r].append(v))
    assert len(history) == 10
    for restart, series in history.items():
        for prev, cur in zip(series, series[1:]):
            assert cur <= prev * (1 + 1e-9) + 1e-12, (restart, prev, cur)


def test_kmeans_bitwise_reproducible() -> None:
    data, _ = two_blobs(n_per=60)
    a = fit_kmeans(data, k=4, seed=123)
    b = fit_kmeans(data, k=4, seed=123)
    assert np.array_equal(a.centroids, b.centroids)
    assert a.inertia == b.inertia
    assert np.array_equal(assign(a, data), assign(b, data))


def test_kmeans_final_inertia_matches_oracle() -> None:
    data, _ = two_blobs(n_per=50)
    model = fit_kmeans(data, k=3, seed=11)
    expect = oracle_inertia(data, model.centroids)
    assert model.inertia == pytest.approx(expect, rel=1e-9)
    assert np.array_equal(assign(model, data), oracle_nearest(data, model.centroids))


def test_kmeans_budget_cut_inertia_still_matches_centroids() -> None:
    data, _ = two_blobs(n_per=50)
    model = fit_kmeans(data, k=4, seed=5, iters=1, restarts=2)
    expect = oracle_inertia(data, model.centroids)
    assert model.inertia == pytest.approx(expect, rel=1e-9)


def test_assign_tie_breaks_to_lowest_index() -> None:
    centroids = np.array([
        [100.0, 100.0],
        [100.0, -100.0],
        [1.0, 0.0],
        [-50.0, 50.0],
        [60.0, 0.0],
        [-1.0, 0.0],
    ])
    model = KmeansModel(centroids=centroids, inertia=0.0)
    # (0, 3) is exactly equidistant to centroids 2 and 5; lowest index wins
    labels = assign(model, np.array([[0.0, 3.0]]))
    assert labels[0] == 2


def test_kmeans_k_exceeding_n_is_error() -> None:
    with pytest.raises(ValueError, match="exceeds"):
        fit_kmeans(np.zeros((3, 2)), k=4)


def test_kmeans_k_equals_n_perfect_fit() -> None:
    data = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0], [9.0, 9.0]])
    model = fit_kmeans(data, k=4, seed=2)
    assert model.inertia == 0.0
    assert not np.isnan(model.centroids).any()
    assert len(np.unique(assign(model, data))) == 4


def test_kmeans_duplicates_never_yield_nan_centroids() -> None:
    data = np.array([[1.0, 1.0]] * 4 + [[8.0, 8.0]] * 3 + [[4.0, 0.0]])
    model = fit_kmeans(data, k=4, seed=9)
    assert model.centroids.shape == (4, 2)
    assert not np.isnan(model.centroids).any()


def test_merge_clusters_groups_nearby_centroids() -> None:
    rng = np.random.default_rng(61)
    blob_centers = np.array([[0.0, 0.0], [0.5, 0.5], [20.0, 20.0], [20.5, 19.5]])
    data = np.vstack([rng.normal(c, 0.1, size=(40, 2)) for c in blob_centers])
    model = fit_kmeans(data, k=4, seed=13)
    merged, mapping = merge_clusters(model, target_k=2, seed=13)
    assert merged.k == 2
    assert mapping.shape == (4,)
    # sources fall into the same merged label iff their centroids are near
    order = np.argsort(model.centroids[:, 0])
    lo, hi = mapping[order[:2]], mapping[order[2:]]
    assert len(set(lo.tolist())) == 1 and len(set(hi.tolist())) == 1
    assert set(lo.tolist()) != set(hi.tolist())


def test_merge_clusters_identity_when_target_equals_k() -> None:
    data, _ = two_blobs(n_per=40)
    model = fit_kmeans(data, k=4, seed=17)
    _, mapping = merge_clusters(model, target_k=4, seed=17)
    assert sorted(mapping.tolist()) == [0, 1, 2, 3]  # a pure relabeling


def test_merge_clusters_target_above_k_is_error() -> None:
    model = KmeansModel(centroids=np.zeros((3, 2)), inertia=0.0)
    with pytest.raises(ValueError, match="target_k"):
        merge_clusters(model, target_k=5)


def test_kmeans_model_round_trip(tmp_path) -> None:
    data, _ = two_blobs(n_per=30)
    model = fit_kmeans(data, k=3, seed=19)
    path = tmp_path / "model.plkm"
    save_kmeans(model, path)
    assert path.read_bytes()[:4] == b"PLKM"
    loaded = load_kmeans(path)
    assert loaded.k == 3 and loaded.dim == data.shape[1]
    # persistence is float32; reload agrees to float32 precision
    assert np.allclose(loaded.centroids, model.centroids, atol=1e-5)
    assert np.array_equal(
        loaded.centroids, model.centroids.astype(np.float32).astype(np.float64)
    )


def test_kmeans_model_truncated_file_is_error(tmp_path) -> None:
    path = tmp_path / "model.plkm"
    model = KmeansModel(centroids=np.ones((2, 3)), inertia=0.0)
    save_kmeans(model, path)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(FormatError, match="truncated"):
        load_kmeans(path)


def test_pca_model_roundtrip_exact(tmp_path) -> None:
    rng = np.random.default_rng(23)
    data = rng.normal(size=(60, 8))
    model = fit_pca(data, out_dim=4)
    path = tmp_path / "model.plpc"
    save_pca(model, path)
    assert path.read_bytes()[:4] == b"PLPC"
    loaded = load_pca(path)
    # float64 persistence: transform output is bit-identical
    assert np.array_equal(loaded.mean, model.mean)
    assert np.array_equal(loaded.components, model.components)
    assert np.array_equal(loaded.explained_variance, model.explained_variance)
    assert np.array_equal(transform_pca(loaded, data), transform_pca(model, data))


def test_pca_model_truncated_file_is_error(tmp_path) -> None:
    rng = np.random.default_rng(24)
    model = fit_pca(rng.normal(size=(20, 5)), out_dim=2)
    path = tmp_path / "model.plpc"
    save_pca(model, path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(FormatError, match="truncated"):
        load_pca(path)
