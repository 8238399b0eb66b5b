"""Two-graph matching: reweighted random walks (RRWM) and Hungarian discretization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.optimize import linear_sum_assignment

from .core import AffinityMatrix, Assignment, ContractError, PointGraph


@dataclass(frozen=True)
class RrwmParams:
    jump_prob: float = 0.2
    inflation: float = 30.0
    sinkhorn_iters: int = 10
    tol: float = 1e-6
    max_iters: int = 300

    def __post_init__(self):
        if not 0 < self.jump_prob < 1:
            raise ContractError("jump_prob must be in (0, 1)")
        if self.inflation <= 0 or self.tol <= 0:
            raise ContractError("inflation and tol must be positive")
        if self.sinkhorn_iters < 1 or self.max_iters < 1:
            raise ContractError("iteration counts must be positive")


def _lawler_coo(k: AffinityMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_i, n_j = k.shape
    rows, cols, vals = [], [], []
    if len(k.edges_i) and len(k.edges_j):
        p, q = np.nonzero(k.edge_affinity)
        v = k.edge_affinity[p, q]
        a, b = k.edges_i[p, 0], k.edges_i[p, 1]
        c, d = k.edges_j[q, 0], k.edges_j[q, 1]
        # both orientations of each undirected edge pair, and the transposed entries
        for u1, u2, w1, w2 in ((a, b, c, d), (b, a, d, c), (a, b, d, c), (b, a, c, d)):
            rows.append(u1 * n_j + w1)
            cols.append(u2 * n_j + w2)
            vals.append(v)
    diag = np.nonzero(k.node_affinity.ravel())[0]
    rows.append(diag)
    cols.append(diag)
    vals.append(k.node_affinity.ravel()[diag])
    return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
            np.concatenate(vals).astype(float))


def lawler_operator(k: AffinityMatrix) -> sp.csr_matrix:
    """Sparse Lawler matrix over row-major vec(X) (index ``a * n_j + c``)."""
    m = k.shape[0] * k.shape[1]
    rows, cols, vals = _lawler_coo(k)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m))


def _lawler_quads(k: AffinityMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The Lawler entries grouped per edge pair.

    Row ``t`` of ``quads`` holds the vec(X) indices ``(ac, bd, ad, bc)`` of one
    edge pair; the four symmetric entries ``ac<->bd`` and ``ad<->bc`` share the
    weight ``vals[t]``. Node affinities come back as a separate diagonal.
    """
    n_j = k.shape[1]
    p, q = np.nonzero(k.edge_affinity)
    a, b = k.edges_i[p, 0], k.edges_i[p, 1]
    c, d = k.edges_j[q, 0], k.edges_j[q, 1]
    quads = np.stack([a * n_j + c, b * n_j + d, a * n_j + d, b * n_j + c], axis=1).astype(np.int64)
    diag = np.nonzero(k.node_affinity.ravel())[0]
    return (quads.reshape(-1, 4), k.edge_affinity[p, q].astype(float),
            diag.astype(np.int64), k.node_affinity.ravel()[diag].astype(float))


@njit(cache=True)
def _rrwm_kernel(quads, vals, diag, diag_vals, n_i, n_j, jump, inflation, sk_iters, tol, max_iters):
    m = n_i * n_j
    row_target = 1.0 if n_i <= n_j else n_j / n_i
    col_target = 1.0 if n_j <= n_i else n_i / n_j
    x = np.full(m, 1.0 / m)
    walked = np.empty(m)
    y = np.empty(m)
    u = np.empty(n_i)
    v = np.empty(n_j)
    for _ in range(max_iters):
        walked[:] = 0.0
        for t in range(len(vals)):
            w = vals[t]
            i0, i1, i2, i3 = quads[t, 0], quads[t, 1], quads[t, 2], quads[t, 3]
            walked[i0] += w * x[i1]
            walked[i1] += w * x[i0]
            walked[i2] += w * x[i3]
            walked[i3] += w * x[i2]
        for t in range(len(diag_vals)):
            walked[diag[t]] += diag_vals[t] * x[diag[t]]
        mass = walked.sum()
        if mass <= 0.0:
            walked[:] = 1.0 / m
        else:
            walked /= mass
        scale = inflation / walked.max()
        for a in range(m):
            y[a] = np.exp(scale * walked[a])
        # Sinkhorn on row/column scale vectors; y itself is rescaled once at the end
        v[:] = 1.0
        for _ in range(sk_iters):
            for r in range(n_i):
                tot = 0.0
                for c in range(n_j):
                    tot += y[r * n_j + c] * v[c]
                u[r] = row_target / tot
            for c in range(n_j):
                tot = 0.0
                for r in range(n_i):
                    tot += y[r * n_j + c] * u[r]
                v[c] = col_target / tot
        total = 0.0
        for r in range(n_i):
            for c in range(n_j):
                a = r * n_j + c
                y[a] = jump * (y[a] * u[r] * v[c]) + (1.0 - jump) * walked[a]
                total += y[a]
        diff = 0.0
        for a in range(m):
            y[a] /= total
            diff += abs(y[a] - x[a])
        x[:] = y
        if diff < tol:
            break
    return x


def rrwm(k: AffinityMatrix, n_i: int, n_j: int, params: RrwmParams = RrwmParams()) -> np.ndarray:
    """Soft assignment by reweighted random walks with Sinkhorn-projected jumps.

    Each step walks ``x <- K x / |K x|_1``, builds a jump target
    ``sinkhorn(exp(inflation * x / max x))`` and mixes the two with weight
    ``jump_prob`` on the jump. Starts uniform, so the result is deterministic.
    """
    if k.shape != (n_i, n_j):
        raise ContractError(f"affinity shape {k.shape} does not match ({n_i}, {n_j})")
    x = _rrwm_kernel(*_lawler_quads(k), n_i, n_j, params.jump_prob,
                     params.inflation, params.sinkhorn_iters, params.tol, params.max_iters)
    return x.reshape(n_i, n_j)


def hungarian(score: np.ndarray) -> Assignment:
    """Maximum-total assignment of size ``min(n_i, n_j)``."""
    score = np.asarray(score, dtype=float)
    if not np.isfinite(score).all():
        raise ContractError("score matrix must be finite")
    r, c = linear_sum_assignment(score, maximize=True)
    return Assignment(score.shape[0], score.shape[1], dict(zip(r.tolist(), c.tolist())))


def solve_pairwise(g_i: PointGraph, g_j: PointGraph, k: AffinityMatrix, params: RrwmParams = RrwmParams()) -> Assignment:
    return hungarian(rrwm(k, g_i.n_nodes, g_j.n_nodes, params))


def solve_many(ks: dict, params: RrwmParams = RrwmParams()) -> dict:
    """Solve every pair in ``ks``, keyed by pair."""
    return {key: hungarian(rrwm(k, *k.shape, params)) for key, k in ks.items()}
