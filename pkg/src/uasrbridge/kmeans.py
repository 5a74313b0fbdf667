"""Lloyd's k-means with k-means++ seeding.

Serves two roles: the cluster-id connector baseline of the experiment
matrix, and the source of auxiliary cluster targets for the optional
cluster-prediction loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Codebook:
    centroids: np.ndarray
    wcss_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float32)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 1:
            raise ValueError("centroids must be a K x d matrix with K >= 1")
        if not np.isfinite(self.centroids).all():
            raise ValueError("centroids must be finite")

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _sq_dists(frames: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = frames[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _plusplus_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = data.shape[0]
    first = int(rng.integers(n))
    chosen = [first]
    d2 = ((data - data[first]) ** 2).sum(axis=1)
    for _ in range(k - 1):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a centroid; take the first
            # unchosen index deterministically
            for idx in range(n):
                if idx not in chosen:
                    chosen.append(idx)
                    break
            continue
        idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, ((data - data[idx]) ** 2).sum(axis=1))
    return data[chosen].astype(np.float64)


def fit(data, k: int, max_iters: int = 100, seed: int = 0) -> Codebook:
    """Lloyd iterations from a k-means++ start.

    Stops when assignments are unchanged or after max_iters. The
    within-cluster sum of squares is asserted non-increasing at every
    iteration and kept on the returned codebook.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("data must be N x d")
    n = data.shape[0]
    if n < k:
        raise ValueError(f"need at least {k} points to fit {k} clusters, got {n}")
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(data, k, rng)
    wcss_history = []
    labels = None
    for _ in range(max_iters):
        d2 = _sq_dists(data, centroids)
        new_labels = d2.argmin(axis=1)
        wcss = float(d2[np.arange(n), new_labels].sum())
        if wcss_history:
            assert wcss <= wcss_history[-1] + 1e-9, "WCSS increased during Lloyd iteration"
        wcss_history.append(wcss)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = data[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
            else:
                # relocate an empty centroid onto the point farthest from its
                # current centroid; no point referenced it, so WCSS cannot rise
                worst = int(d2[np.arange(n), labels].argmax())
                centroids[c] = data[worst]
    book = Codebook(centroids.astype(np.float32), wcss_history)
    d = _sq_dists(book.centroids.astype(np.float64), book.centroids.astype(np.float64))
    np.fill_diagonal(d, np.inf)
    if d.min() < 1e-18:
        raise ValueError("degenerate fit: two centroids coincide")
    return book


def assign(codebook: Codebook, frames) -> np.ndarray:
    """Nearest-centroid id per frame; ties break toward the lower index."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != codebook.centroids.shape[1]:
        raise ValueError(
            f"frames of dim {frames.shape} do not match centroids "
            f"{codebook.centroids.shape}")
    d2 = _sq_dists(frames, codebook.centroids.astype(np.float64))
    return d2.argmin(axis=1)


def auxiliary_view(frames: np.ndarray, seed: int, out_dim: int = 2,
                   noise_sigma: float = 0.1) -> np.ndarray:
    """A second, cruder view of the features: a fixed random linear
    projection plus noise. Cluster ids fitted on this view feed the
    auxiliary cluster-prediction loss."""
    frames = np.asarray(frames, dtype=np.float64)
    rng = np.random.default_rng(seed)
    proj = rng.normal(size=(frames.shape[1], out_dim)) / np.sqrt(frames.shape[1])
    noisy = frames @ proj + rng.normal(scale=noise_sigma, size=(frames.shape[0], out_dim))
    return noisy.astype(np.float32)
