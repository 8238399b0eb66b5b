"""Hand-crafted Lawler affinities, pairwise affinity scores and affinity fusion."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .core import AffinityMatrix, Assignment, ContractError, PointGraph

ANGLE_EPS = 1e-9


@dataclass(frozen=True)
class EdgeFeature:
    length: float
    angle: float


def _edge_feature_arrays(g: PointGraph) -> tuple[np.ndarray, np.ndarray]:
    if not g.edges:
        return np.zeros(0), np.zeros(0)
    e = np.asarray(g.edges)
    # first endpoint is the higher node index, so edge (0,0)-(0,1) points up at +pi/2
    p1, p2 = g.points[e[:, 1]], g.points[e[:, 0]]
    dx = p1[:, 0] - p2[:, 0]
    dy = p1[:, 1] - p2[:, 1]
    return np.hypot(dx, dy), np.arctan(dy / (dx + ANGLE_EPS))


def extract_edge_features(g: PointGraph) -> list[EdgeFeature]:
    lengths, angles = _edge_feature_arrays(g)
    return [EdgeFeature(float(d), float(t)) for d, t in zip(lengths, angles)]


def raw_edge_affinity(d1, t1, d2, t2, beta: float = 0.9, sigma_sq: float = 0.03):
    """exp(-(beta*|d1-d2| + (1-beta)*|t1-t2|) / sigma_sq), broadcasting."""
    return np.exp(-(beta * np.abs(d1 - d2) + (1 - beta) * np.abs(t1 - t2)) / sigma_sq)


def build_raw_affinity(g_i: PointGraph, g_j: PointGraph, beta: float = 0.9, sigma_sq: float = 0.03) -> AffinityMatrix:
    """Geometric edge affinity from edge lengths and orientations; no node term."""
    if not 0 <= beta <= 1 or sigma_sq <= 0:
        raise ContractError(f"bad affinity parameters beta={beta}, sigma_sq={sigma_sq}")
    di, ti = _edge_feature_arrays(g_i)
    dj, tj = _edge_feature_arrays(g_j)
    ea = raw_edge_affinity(di[:, None], ti[:, None], dj[None, :], tj[None, :], beta, sigma_sq)
    return AffinityMatrix(
        np.zeros((g_i.n_nodes, g_j.n_nodes)),
        np.asarray(g_i.edges, dtype=np.int64).reshape(-1, 2),
        np.asarray(g_j.edges, dtype=np.int64).reshape(-1, 2),
        ea,
    )


def affinity_score(x: Assignment, k: AffinityMatrix) -> float:
    """vec(X)^T K vec(X) for the factored affinity.

    Each matched undirected edge pair appears in both orientations of the
    Lawler matrix, so it contributes twice.
    """
    if (x.rows, x.cols) != k.shape:
        raise ContractError(f"assignment {x.rows}x{x.cols} does not fit affinity {k.shape}")
    m = x.matches
    total = sum(k.node_affinity[r, c] for r, c in m.items())
    if len(k.edges_i) and len(k.edges_j):
        eid_j = {(int(a), int(b)): q for q, (a, b) in enumerate(k.edges_j)}
        for p, (a, b) in enumerate(k.edges_i):
            ca, cb = m.get(int(a)), m.get(int(b))
            if ca is None or cb is None:
                continue
            q = eid_j.get((min(ca, cb), max(ca, cb)))
            if q is not None:
                total += 2.0 * k.edge_affinity[p, q]
    return float(total)


def fuse_affinity(k_a: AffinityMatrix, k_b: AffinityMatrix, alpha: float) -> AffinityMatrix:
    """``k_a + alpha * k_b`` rescaled by its largest entry."""
    if (
        k_a.shape != k_b.shape
        or not np.array_equal(k_a.edges_i, k_b.edges_i)
        or not np.array_equal(k_a.edges_j, k_b.edges_j)
    ):
        raise ContractError("affinities to fuse must share shape and edge keys")
    node = k_a.node_affinity + alpha * k_b.node_affinity
    edge = k_a.edge_affinity + alpha * k_b.edge_affinity
    top = max(node.max(initial=0.0), edge.max(initial=0.0))
    if top > 0:
        node, edge = node / top, edge / top
    return AffinityMatrix(node, k_a.edges_i, k_a.edges_j, edge)


def normalized_score(x: Assignment, k: AffinityMatrix) -> float:
    """Affinity score divided by ``min(n_i, n_j)`` so pairs of different size compare."""
    return affinity_score(x, k) / min(k.shape)


def build_all_affinities(graphs: Sequence[PointGraph], beta: float = 0.9, sigma_sq: float = 0.03) -> dict:
    """Raw affinities for every unordered pair ``(i, j)``, ``i < j``."""
    return {
        (i, j): build_raw_affinity(graphs[i], graphs[j], beta, sigma_sq)
        for i in range(len(graphs))
        for j in range(i + 1, len(graphs))
    }


def pair_affinity(ks: Mapping[tuple[int, int], AffinityMatrix], i: int, j: int) -> AffinityMatrix:
    return ks[i, j] if i < j else ks[j, i].transposed()


@njit(cache=True)
def _block_scores(ext_b, rows, cols, ends, eid, edge_w, node_w):
    out = np.zeros((len(rows), len(cols)))
    n_edges = ends.shape[1]
    for bi in range(len(rows)):
        i = rows[bi]
        for bj in range(len(cols)):
            j = cols[bj]
            if i == j:
                continue
            m = ext_b[bi, bj]
            s = 0.0
            for e in range(n_edges):
                s += edge_w[i, j, e, eid[j, m[ends[i, e, 0]], m[ends[i, e, 1]]]]
            if node_w.shape[0]:
                for a in range(len(m)):
                    s += node_w[i, j, a, m[a]]
            out[bi, bj] = s
    return out


class PairScorer:
    """Scores whole tables of row->col maps against all pairwise affinities at once.

    Tables have shape ``(N, N, n_max + 1)``; index ``n_max`` is a null node that
    every unmatched row points to and that maps to itself. Padded edges and
    non-edges resolve to a zero affinity column.
    """

    def __init__(self, sizes: Sequence[int], ks: Mapping[tuple[int, int], AffinityMatrix]):
        self.sizes = np.asarray(sizes, dtype=np.int64)
        n_graphs = len(sizes)
        n_max = int(self.sizes.max())
        self.null = n_max
        edge_lists = [None] * n_graphs
        for (i, j), k in ks.items():
            edge_lists[i] = k.edges_i
            edge_lists[j] = k.edges_j
        edge_lists = [e if e is not None else np.zeros((0, 2), np.int64) for e in edge_lists]
        e_max = max(len(e) for e in edge_lists)
        self.e_max = e_max

        self.ends = np.full((n_graphs, e_max, 2), n_max, dtype=np.int64)
        self.eid = np.full((n_graphs, n_max + 1, n_max + 1), e_max, dtype=np.int64)
        for g, e in enumerate(edge_lists):
            self.ends[g, : len(e)] = e
            self.eid[g, e[:, 0], e[:, 1]] = np.arange(len(e))
            self.eid[g, e[:, 1], e[:, 0]] = np.arange(len(e))

        self.edge_w = np.zeros((n_graphs, n_graphs, e_max, e_max + 1))
        self.node_w = None
        for (i, j), k in ks.items():
            ea = k.edge_affinity
            self.edge_w[i, j, : ea.shape[0], : ea.shape[1]] = 2.0 * ea
            self.edge_w[j, i, : ea.shape[1], : ea.shape[0]] = 2.0 * ea.T
            if np.any(k.node_affinity):
                if self.node_w is None:
                    self.node_w = np.zeros((n_graphs, n_graphs, n_max + 1, n_max + 1))
                na = k.node_affinity
                self.node_w[i, j, : na.shape[0], : na.shape[1]] = na
                self.node_w[j, i, : na.shape[1], : na.shape[0]] = na.T
        self.norm = np.minimum.outer(self.sizes, self.sizes).astype(float)

    def extend(self, table: np.ndarray) -> np.ndarray:
        """Convert a ``-1``-padded ``(N, N, n_max)`` table to the null-node form."""
        n = table.shape[0]
        ext = np.full((n, n, self.null + 1), self.null, dtype=np.int64)
        ext[:, :, : self.null] = np.where(table < 0, self.null, table)
        return ext

    @staticmethod
    def shrink(ext: np.ndarray, null: int) -> np.ndarray:
        out = ext[:, :, :null].copy()
        out[out == null] = -1
        return out

    def raw_scores(self, ext: np.ndarray, rows=None, cols=None) -> np.ndarray:
        """Unnormalized scores for the table (or a sub-block given row/col graph indices)."""
        n_graphs = len(self.sizes)
        rows = np.arange(n_graphs) if rows is None else np.asarray(rows, dtype=np.int64)
        cols = np.arange(n_graphs) if cols is None else np.asarray(cols, dtype=np.int64)
        ext_b = np.ascontiguousarray(ext.reshape(len(rows), len(cols), -1), dtype=np.int64)
        node_w = self.node_w if self.node_w is not None else np.zeros((0, 0, 0, 0))
        return _block_scores(ext_b, rows, cols, self.ends, self.eid, self.edge_w, node_w)

    def scores(self, ext: np.ndarray) -> np.ndarray:
        """Normalized score matrix J with a zero diagonal."""
        s = self.raw_scores(ext) / self.norm
        np.fill_diagonal(s, 0.0)
        return s
