"""Matching accuracy, clustering purity, Rand index and clustering accuracy."""
from __future__ import annotations

import warnings
from typing import Optional, Sequence

import numpy as np

from .core import ClusterDivision, ClusterIndicator, ContractError, MatchingSet


def pair_accuracy(x_row: np.ndarray, gt_row: np.ndarray) -> Optional[float]:
    """Fraction of ground-truth matches reproduced; ``None`` when the pair has none."""
    mask = gt_row >= 0
    total = int(mask.sum())
    if total == 0:
        return None
    return float((x_row[mask] == gt_row[mask]).sum()) / total


def matching_accuracy(x: MatchingSet, x_gt: MatchingSet, c_gt: ClusterIndicator,
                      inlier_counts: Optional[Sequence[int]] = None) -> float:
    """Mean pairwise accuracy over ordered intra-cluster pairs ``i != j``.

    ``x_gt`` only carries inlier correspondences, so outlier rows never count.
    ``inlier_counts`` optionally truncates ground truth to the first rows.
    """
    if x.sizes != x_gt.sizes or c_gt.n_graphs != x.n_graphs:
        raise ContractError("matching sets and indicator disagree on shape")
    accs = []
    for i in range(x.n_graphs):
        gt_rows = x_gt.table[i, :, : x.sizes[i]]
        if inlier_counts is not None:
            gt_rows = gt_rows.copy()
            gt_rows[:, inlier_counts[i]:] = -1
        for j in range(x.n_graphs):
            if i == j or not c_gt.selected[i, j]:
                continue
            acc = pair_accuracy(x.table[i, j, : x.sizes[i]], gt_rows[j])
            if acc is not None:
                accs.append(acc)
    if not accs:
        warnings.warn("no intra-cluster pairs with ground truth; matching accuracy set to 0")
        return 0.0
    return float(np.mean(accs))


def _contingency(pred: ClusterDivision, gt: ClusterDivision) -> np.ndarray:
    if pred.n_graphs != gt.n_graphs:
        raise ContractError("divisions cover different numbers of graphs")
    table = np.zeros((pred.n_clusters, gt.n_clusters), dtype=np.int64)
    np.add.at(table, (np.asarray(pred.labels), np.asarray(gt.labels)), 1)
    return table


def clustering_purity(pred: ClusterDivision, gt: ClusterDivision) -> float:
    table = _contingency(pred, gt)
    return float(table.max(axis=1).sum()) / pred.n_graphs


def rand_index(pred: ClusterDivision, gt: ClusterDivision) -> float:
    """Agreeing ordered pairs over N^2, diagonal included."""
    p = np.asarray(pred.labels)
    g = np.asarray(gt.labels)
    if len(p) != len(g):
        raise ContractError("divisions cover different numbers of graphs")
    same_p = p[:, None] == p[None, :]
    same_g = g[:, None] == g[None, :]
    return float((same_p == same_g).sum()) / len(p) ** 2


def clustering_accuracy(pred: ClusterDivision, gt: ClusterDivision) -> float:
    """One minus the split and merge penalties, averaged over ground-truth clusters.

    Both inner sums run over ordered pairs of distinct clusters.
    """
    table = _contingency(pred, gt).astype(float)  # [pred, gt]
    gt_sizes = table.sum(axis=0)
    split = 0.0
    for a in range(table.shape[1]):
        col = table[:, a]
        split += (col.sum() ** 2 - (col ** 2).sum()) / gt_sizes[a] ** 2
    merge = 0.0
    for row in table:
        frac = row / gt_sizes
        merge += frac.sum() ** 2 - (frac ** 2).sum()
    return 1.0 - (split + merge) / gt.n_clusters
