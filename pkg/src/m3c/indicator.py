"""Cluster indicators: transitivity checks, components, and relaxed ranking schemes.

All ranking schemes work on unordered off-diagonal pairs ``(i, j)``, ``i < j``,
and mirror the selection so the result stays symmetric. Ties are broken by
weight (descending) and then by lexicographic pair index.
"""
from __future__ import annotations

import numpy as np
from scipy.sparse.csgraph import connected_components

from .core import ClusterDivision, ClusterIndicator, ContractError


def check_transitive(c: ClusterIndicator) -> bool:
    s = c.selected.astype(np.int64)
    # (s @ s)[i, k] > 0 iff some j links i-j-k
    return bool(np.all(c.selected | ((s @ s) == 0)))


def components(c: ClusterIndicator) -> np.ndarray:
    _, labels = connected_components(c.selected, directed=False)
    return labels


def scc_count(c: ClusterIndicator) -> int:
    n, _ = connected_components(c.selected, directed=False)
    return int(n)


def division_to_indicator(d: ClusterDivision) -> ClusterIndicator:
    labels = np.asarray(d.labels)
    return ClusterIndicator(labels[:, None] == labels[None, :])


def indicator_to_division(c: ClusterIndicator) -> ClusterDivision:
    return ClusterDivision.from_labels(components(c).tolist())


def _check_weights(weights, r=None) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or not np.allclose(w, w.T):
        raise ContractError("weights must be a symmetric square matrix")
    if r is not None and not 0 < r <= 1:
        raise ContractError(f"r must be in (0, 1], got {r}")
    return w


def _upper_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, 1)


def _neighbor_ranks(w: np.ndarray) -> np.ndarray:
    """``ranks[v, u]`` = 1-based position of ``u`` among ``v``'s neighbors by weight."""
    n = len(w)
    ranks = np.zeros((n, n), dtype=np.int64)
    for v in range(n):
        others = [u for u in range(n) if u != v]
        order = sorted(others, key=lambda u: (-w[v, u], u))
        for pos, u in enumerate(order, start=1):
            ranks[v, u] = pos
    return ranks


def global_order(w: np.ndarray) -> list[tuple[int, int]]:
    iu, ju = _upper_pairs(len(w))
    return sorted(zip(iu.tolist(), ju.tolist()), key=lambda p: (-w[p], p))


def fuse_order(w: np.ndarray) -> list[tuple[int, int]]:
    ranks = _neighbor_ranks(w)
    iu, ju = _upper_pairs(len(w))
    return sorted(zip(iu.tolist(), ju.tolist()), key=lambda p: (ranks[p[1], p[0]] + ranks[p[0], p[1]], -w[p], p))


def local_order(w: np.ndarray) -> list[tuple[int, int]]:
    """Pairs in the order a growing per-graph neighbor budget admits them."""
    ranks = _neighbor_ranks(w)
    iu, ju = _upper_pairs(len(w))
    return sorted(zip(iu.tolist(), ju.tolist()), key=lambda p: (min(ranks[p], ranks[p[::-1]]), -w[p], p))


def pair_budget(n: int, r: float) -> int:
    """Unordered pairs allowed by a global ratio ``r`` (floor of rN^2/2, at least 1)."""
    return min(max(1, int(np.floor(r * n * n / 2))), n * (n - 1) // 2)


def global_rank_indicator(weights, r: float) -> ClusterIndicator:
    w = _check_weights(weights, r)
    n = len(w)
    if n < 2:
        return ClusterIndicator.identity(n)
    return ClusterIndicator.from_pairs(n, global_order(w)[: pair_budget(n, r)])


def local_rank_indicator(weights, r: float) -> ClusterIndicator:
    w = _check_weights(weights, r)
    n = len(w)
    if n < 2:
        return ClusterIndicator.identity(n)
    k = max(1, int(np.floor(r * n)))
    ranks = _neighbor_ranks(w)
    np.fill_diagonal(ranks, n + 1)
    picked = ranks <= k
    return ClusterIndicator(picked | picked.T | np.eye(n, dtype=bool))


def fuse_rank_indicator(weights, r: float) -> ClusterIndicator:
    w = _check_weights(weights, r)
    n = len(w)
    if n < 2:
        return ClusterIndicator.identity(n)
    return ClusterIndicator.from_pairs(n, fuse_order(w)[: pair_budget(n, r)])


_ORDERS = {"global": global_order, "local": local_order, "fuse": fuse_order}


def auto_connect_indicator(weights, scheme: str = "fuse") -> ClusterIndicator:
    """Add pairs in the scheme's rank order until the selection graph is connected."""
    w = _check_weights(weights)
    if scheme not in _ORDERS:
        raise ContractError(f"auto-connect needs a ranking scheme, got {scheme!r}")
    n = len(w)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    chosen = []
    n_comp = n
    for i, j in _ORDERS[scheme](w):
        if n_comp == 1:
            break
        chosen.append((i, j))
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            n_comp -= 1
    return ClusterIndicator.from_pairs(n, chosen)


def rank_indicator(weights, scheme: str, r) -> ClusterIndicator:
    """Dispatch to a relaxed scheme; ``r == "auto"`` uses the connect-until rule."""
    if r == "auto":
        return auto_connect_indicator(weights, scheme)
    fn = {"global": global_rank_indicator, "local": local_rank_indicator, "fuse": fuse_rank_indicator}.get(scheme)
    if fn is None:
        raise ContractError(f"unknown ranking scheme {scheme!r}")
    return fn(weights, float(r))
