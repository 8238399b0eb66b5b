"""KNN sparsification and normalized spectral clustering of pairwise scores."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClusterDivision, ConfigError, ContractError


@dataclass(frozen=True)
class SpectralParams:
    kmeans_restarts: int = 10
    kmeans_max_iters: int = 100
    eigen_tol: float = 1e-10
    seed: int = 0


def knn_sparsify(weights, k: int) -> np.ndarray:
    """Keep ``w_ij`` when ``j`` is among ``i``'s ``k`` best neighbors or vice versa."""
    w = np.asarray(weights, dtype=float)
    if k < 1:
        raise ContractError("k must be >= 1")
    n = len(w)
    keep = np.zeros((n, n), dtype=bool)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        for j in sorted(others, key=lambda j: (-w[i, j], j))[:k]:
            keep[i, j] = True
    keep |= keep.T
    out = np.where(keep, w, 0.0)
    np.fill_diagonal(out, 0.0)
    return out


def sym_laplacian(weights) -> np.ndarray:
    """I - D^-1/2 W D^-1/2, with isolated nodes given a zero scaling."""
    w = np.asarray(weights, dtype=float)
    w = (w + w.T) / 2
    deg = w.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    return np.eye(len(w)) - inv_sqrt[:, None] * w * inv_sqrt[None, :]


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = [x[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(((x[:, None, :] - np.asarray(centers)[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        if total <= 0:
            centers.append(x[rng.integers(n)])
        else:
            centers.append(x[rng.choice(n, p=d2 / total)])
    return np.asarray(centers)


def kmeans(x: np.ndarray, k: int, restarts: int = 10, max_iters: int = 100, seed: int = 0):
    """Lloyd's k-means with k-means++ seeding. Returns ``(labels, inertia)`` of the best restart."""
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        centers = _kmeans_pp(x, k, rng)
        labels = None
        for _ in range(max_iters):
            d2 = ((x[:, None, :] - centers[None]) ** 2).sum(-1)
            new = d2.argmin(axis=1)
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            for c in range(k):
                members = x[labels == c]
                if len(members):
                    centers[c] = members.mean(axis=0)
        inertia = float(((x - centers[labels]) ** 2).sum())
        # strict < keeps the earliest restart on ties
        if best is None or inertia < best[1] - 1e-12:
            best = (labels.copy(), inertia)
    return best


def spectral_embedding(weights, n_clusters: int) -> np.ndarray:
    lap = sym_laplacian(weights)
    _, vecs = np.linalg.eigh(lap)
    emb = vecs[:, :n_clusters]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    return np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 0)


def spectral_cluster(weights, n_clusters: int, params: SpectralParams = SpectralParams()) -> ClusterDivision:
    w = np.asarray(weights, dtype=float)
    n = len(w)
    if not 1 <= n_clusters <= n:
        raise ConfigError(f"cannot form {n_clusters} clusters from {n} graphs")
    if n_clusters == 1:
        return ClusterDivision((0,) * n, 1)
    if n_clusters == n:
        return ClusterDivision(tuple(range(n)), n)
    emb = spectral_embedding(w, n_clusters)
    labels, _ = kmeans(emb, n_clusters, params.kmeans_restarts, params.kmeans_max_iters, params.seed)
    division = ClusterDivision.from_labels(labels.tolist())
    if division.n_clusters < n_clusters:
        division = _split_to(division, n_clusters, emb)
    return division


def _split_to(division: ClusterDivision, n_clusters: int, emb: np.ndarray) -> ClusterDivision:
    """Peel off the points farthest from their centroid until ``n_clusters`` are used."""
    labels = list(division.labels)
    k = division.n_clusters
    while k < n_clusters:
        arr = np.asarray(labels)
        dist = np.zeros(len(arr))
        for c in range(k):
            idx = arr == c
            if idx.sum() > 1:
                dist[idx] = ((emb[idx] - emb[idx].mean(axis=0)) ** 2).sum(-1)
        counts = np.bincount(arr, minlength=k)
        dist[counts[arr] <= 1] = -1
        labels[int(dist.argmax())] = k
        k += 1
    return ClusterDivision(tuple(labels), k)


def cluster_scores(weights, n_clusters: int, knn_k: int = 10, params: SpectralParams = SpectralParams()) -> ClusterDivision:
    """Sparsify then spectrally cluster a pairwise score matrix."""
    return spectral_cluster(knn_sparsify(weights, knn_k), n_clusters, params)
