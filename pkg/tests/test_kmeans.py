"""k-means contracts, including the exhaustive-partition oracle."""

import itertools

import numpy as np
import pytest

from uasrbridge import kmeans


def blobs(rng, n_per, centers, scale=0.05):
    pts, labels = [], []
    for i, c in enumerate(centers):
        pts.append(rng.normal(loc=c, scale=scale, size=(n_per, len(c))))
        labels += [i] * n_per
    return np.concatenate(pts), np.array(labels)


def test_single_cluster_is_the_mean():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(20, 3))
    book = kmeans.fit(data, 1, seed=0)
    np.testing.assert_allclose(book.centroids[0], data.mean(axis=0), atol=1e-6)


def test_two_points_two_clusters():
    data = np.array([[0.0, 0.0], [3.0, 4.0]])
    book = kmeans.fit(data, 2, seed=1)
    got = sorted(book.centroids.tolist())
    np.testing.assert_allclose(got, [[0.0, 0.0], [3.0, 4.0]], atol=1e-7)


def test_rejects_fewer_points_than_clusters():
    with pytest.raises(ValueError, match="at least 5"):
        kmeans.fit(np.zeros((3, 2)), 5)


def exhaustive_best_partition(data, k):
    """Brute-force optimal k-partition by WCSS over all k^n assignments.

    WCSS(labels) = sum_n ||x_n||^2 - sum_c ||sum_c||^2 / count_c, evaluated
    for every assignment at once.
    """
    n = len(data)
    labels_all = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int8)
    total = (data ** 2).sum()
    wcss = np.full(len(labels_all), total)
    valid = np.ones(len(labels_all), dtype=bool)
    for c in range(k):
        mask = (labels_all == c)
        counts = mask.sum(axis=1)
        valid &= counts > 0
        sums = mask.astype(np.float64) @ data
        with np.errstate(divide="ignore", invalid="ignore"):
            wcss -= np.where(counts > 0, (sums ** 2).sum(axis=1) / counts, 0.0)
    wcss[~valid] = np.inf
    return labels_all[wcss.argmin()]


def same_up_to_relabeling(a, b):
    mapping = {}
    for x, y in zip(a, b):
        if x in mapping and mapping[x] != y:
            return False
        mapping[x] = y
    return len(set(mapping.values())) == len(mapping)


def test_blob_recovery_matches_blob_identity():
    rng = np.random.default_rng(2)
    data, truth = blobs(rng, 20, [(0, 0, 0), (5, 0, 0), (0, 5, 5)])
    book = kmeans.fit(data, 3, seed=3)
    got = kmeans.assign(book, data)
    assert same_up_to_relabeling(got.tolist(), truth.tolist())


def test_fit_matches_exhaustive_oracle_on_small_subsample():
    rng = np.random.default_rng(4)
    data, truth = blobs(rng, 4, [(0, 0), (4, 0), (0, 4)])
    assert len(data) == 12
    book = kmeans.fit(data, 3, seed=5)
    got = kmeans.assign(book, data)
    oracle = exhaustive_best_partition(data, 3)
    assert same_up_to_relabeling(got.tolist(), oracle.tolist())
    assert same_up_to_relabeling(got.tolist(), truth.tolist())


def test_assign_exact_centroid_and_tie_break():
    book = kmeans.Codebook(np.array([
        [0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [-1.0, 0.0]],
        dtype=np.float32))
    ids = kmeans.assign(book, np.array([[3.0, 0.0]]))
    assert ids[0] == 3
    # frame equidistant between centroids 1 and 4, everything else farther
    book = kmeans.Codebook(np.array(
        [[9.0, 9.0], [1.0, 0.0], [9.0, -9.0], [9.0, 0.0], [-1.0, 0.0]],
        dtype=np.float32))
    ids = kmeans.assign(book, np.array([[0.0, 0.0]]))
    assert ids[0] == 1


def test_assign_matches_naive_scan():
    rng = np.random.default_rng(6)
    book = kmeans.Codebook(rng.normal(size=(7, 4)).astype(np.float32))
    frames = rng.normal(size=(50, 4)).astype(np.float32)
    ids = kmeans.assign(book, frames)
    for t in range(len(frames)):
        best, best_d = 0, np.inf
        for c in range(book.k):
            d = float(((frames[t].astype(np.float64)
                        - book.centroids[c].astype(np.float64)) ** 2).sum())
            if d < best_d:
                best, best_d = c, d
        assert ids[t] == best


def test_assign_dimension_mismatch():
    book = kmeans.Codebook(np.zeros((2, 3), np.float32))
    with pytest.raises(ValueError, match="do not match"):
        kmeans.assign(book, np.zeros((4, 5)))


def test_wcss_non_increasing_over_many_random_fits():
    rng = np.random.default_rng(7)
    for trial in range(100):
        n = int(rng.integers(10, 40))
        d = int(rng.integers(2, 5))
        k = int(rng.integers(1, 5))
        data = rng.normal(size=(max(n, k), d))
        book = kmeans.fit(data, k, seed=trial)
        hist = book.wcss_history
        assert all(a >= b - 1e-9 for a, b in zip(hist, hist[1:]))


def test_fit_deterministic_given_seed():
    rng = np.random.default_rng(8)
    data = rng.normal(size=(40, 3))
    a = kmeans.fit(data, 4, seed=9)
    b = kmeans.fit(data, 4, seed=9)
    np.testing.assert_array_equal(a.centroids, b.centroids)


def test_auxiliary_view_shape_and_determinism():
    rng = np.random.default_rng(9)
    frames = rng.normal(size=(30, 16)).astype(np.float32)
    a = kmeans.auxiliary_view(frames, seed=3)
    b = kmeans.auxiliary_view(frames, seed=3)
    assert a.shape == (30, 2)
    np.testing.assert_array_equal(a, b)
