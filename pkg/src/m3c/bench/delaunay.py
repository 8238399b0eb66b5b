"""Bowyer-Watson Delaunay triangulation for small 2-D keypoint sets."""
from __future__ import annotations

import numpy as np

from ..core import ContractError

def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def in_circumcircle(a, b, c, p) -> bool:
    """Strict test: is ``p`` inside the circumcircle of the triangle ``abc``?"""
    ax, ay = a[0] - p[0], a[1] - p[1]
    bx, by = b[0] - p[0], b[1] - p[1]
    cx, cy = c[0] - p[0], c[1] - p[1]
    det = (
        (ax * ax + ay * ay) * (bx * cy - cx * by)
        - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay)
    )
    return det > 0 if _orient(a, b, c) > 0 else det < 0


def _all_collinear(pts: np.ndarray) -> bool:
    a, b = pts[0], pts[1]
    return all(abs(_orient(a, b, p)) <= 1e-12 for p in pts[2:])


def _hull_edges(pts: np.ndarray) -> set[tuple[int, int]]:
    order = sorted(range(len(pts)), key=lambda i: (pts[i][0], pts[i][1]))

    def chain(idx):
        out: list[int] = []
        for i in idx:
            while len(out) >= 2 and _orient(pts[out[-2]], pts[out[-1]], pts[i]) <= 0:
                out.pop()
            out.append(i)
        return out

    lower, upper = chain(order), chain(order[::-1])
    ring = lower[:-1] + upper[:-1]
    return {(min(a, b), max(a, b)) for a, b in zip(ring, ring[1:] + ring[:1])}


def bowyer_watson(pts: np.ndarray) -> list[tuple[int, int, int]]:
    n = len(pts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center = (lo + hi) / 2
    span = max(float((hi - lo).max()), 1e-12) * 1e4
    work = [tuple(p) for p in pts] + [
        (center[0] - 2 * span, center[1] - span),
        (center[0] + 2 * span, center[1] - span),
        (center[0], center[1] + 2 * span),
    ]
    tris = {(n, n + 1, n + 2)}
    for i in range(n):
        p = work[i]
        bad = [t for t in tris if in_circumcircle(work[t[0]], work[t[1]], work[t[2]], p)]
        count: dict[tuple[int, int], int] = {}
        for t in bad:
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                key = (min(e), max(e))
                count[key] = count.get(key, 0) + 1
        tris.difference_update(bad)
        for (a, b), c in count.items():
            if c == 1:
                tris.add((a, b, i))
    return sorted(tuple(sorted(t)) for t in tris if max(t) < n)


def delaunay(points) -> set[tuple[int, int]]:
    """Undirected Delaunay edges ``(a, b)``, ``a < b``, of a 2-D point set.

    Collinear sets yield the path through the points in line order. Ties from
    co-circular points resolve deterministically through the strict in-circle test.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n <= 1:
        return set()
    if len({tuple(p) for p in pts.tolist()}) < n:
        raise ContractError("duplicate points cannot be triangulated")
    if n == 2:
        return {(0, 1)}
    if _all_collinear(pts):
        order = sorted(range(n), key=lambda i: (pts[i][0], pts[i][1]))
        return {(min(a, b), max(a, b)) for a, b in zip(order, order[1:])}
    edges = _hull_edges(pts)
    for a, b, c in bowyer_watson(pts):
        edges |= {(a, b), (a, c), (b, c)}
    return edges
