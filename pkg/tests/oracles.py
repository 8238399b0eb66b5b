"""Brute-force reference implementations shared by unit and acceptance tests."""
import itertools
from fractions import Fraction

import numpy as np

from m3c.bench.delaunay import in_circumcircle
from m3c.core import Assignment


def partial_injections(rows: int, cols: int):
    """Every injective partial map rows -> cols."""
    for k in range(min(rows, cols) + 1):
        for rs in itertools.combinations(range(rows), k):
            for cs in itertools.permutations(range(cols), k):
                yield Assignment(rows, cols, dict(zip(rs, cs)))


def set_partitions(n: int):
    """All partitions of range(n) as restricted-growth label tuples."""
    def grow(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for lab in range(top + 2):
            yield from grow(prefix + [lab], max(top, lab))
    if n == 0:
        yield ()
    else:
        yield from grow([0], 0)


def best_assignment_total(score):
    n_i, n_j = score.shape
    if n_i <= n_j:
        return max(score[np.arange(n_i), list(c)].sum() for c in itertools.permutations(range(n_j), n_i))
    return max(score[list(r), np.arange(n_j)].sum() for r in itertools.permutations(range(n_i), n_j))


def delaunay_edges(pts):
    """Edges of every triangle whose circumcircle holds no other point."""
    n = len(pts)
    edges = set()
    for a, b, c in itertools.combinations(range(n), 3):
        area = (pts[b][0] - pts[a][0]) * (pts[c][1] - pts[a][1]) - (pts[b][1] - pts[a][1]) * (pts[c][0] - pts[a][0])
        if abs(area) < 1e-12:
            continue
        if not any(in_circumcircle(pts[a], pts[b], pts[c], pts[p]) for p in range(n) if p not in (a, b, c)):
            edges |= {(a, b), (a, c), (b, c)}
    return edges


# node-level metric oracles in exact rational arithmetic

def purity(pred, gt):
    total = 0
    for p in set(pred):
        members = [i for i, lab in enumerate(pred) if lab == p]
        total += max(sum(1 for i in members if gt[i] == g) for g in set(gt))
    return Fraction(total, len(pred))


def rand(pred, gt):
    n = len(pred)
    agree = sum((pred[i] == pred[j]) == (gt[i] == gt[j]) for i in range(n) for j in range(n))
    return Fraction(agree, n * n)


def cluster_accuracy(pred, gt):
    n = len(pred)
    size = {g: gt.count(g) for g in set(gt)}
    split = sum(Fraction(1, size[gt[u]] ** 2)
                for u in range(n) for v in range(n) if gt[u] == gt[v] and pred[u] != pred[v])
    merge = sum(Fraction(1, size[gt[u]] * size[gt[v]])
                for u in range(n) for v in range(n) if pred[u] == pred[v] and gt[u] != gt[v])
    return 1 - (split + merge) / len(size)
