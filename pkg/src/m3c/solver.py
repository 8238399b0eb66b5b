"""Minorize-maximization loop for joint multi-graph matching and clustering.

Each iteration builds a pair-selection indicator from the current pairwise
scores (the surrogate) and then improves matchings by composing them along
paths of the resulting supergraph, Floyd style.
"""
from __future__ import annotations

import time
from typing import Mapping, Optional, Sequence

import numpy as np

from .affinity import PairScorer, build_all_affinities
from .clustering import SpectralParams, cluster_scores
from .core import (
    AffinityMatrix,
    ClusterDivision,
    ClusterIndicator,
    ConfigError,
    ContractError,
    IterationRecord,
    MatchingSet,
    PointGraph,
    RunTrace,
    SolverConfig,
)
from .indicator import division_to_indicator, rank_indicator
from .pairwise import RrwmParams, solve_many

IMPROVE_EPS = 1e-9


def objective_from_scores(scores: np.ndarray, c: ClusterIndicator) -> float:
    """Mean of the selected off-diagonal pair scores (0 when nothing is selected)."""
    sel = c.selected.copy()
    np.fill_diagonal(sel, False)
    n_sel = int(sel.sum())
    return float(scores[sel].sum() / n_sel) if n_sel else 0.0


def pair_scores(x: MatchingSet, ks: Mapping[tuple[int, int], AffinityMatrix],
                scorer: Optional[PairScorer] = None) -> np.ndarray:
    scorer = scorer or PairScorer(x.sizes, ks)
    return scorer.scores(scorer.extend(x.table))


def joint_objective(x: MatchingSet, c: ClusterIndicator, ks: Mapping[tuple[int, int], AffinityMatrix],
                    scorer: Optional[PairScorer] = None) -> float:
    if c.n_graphs != x.n_graphs:
        raise ContractError("indicator and matchings disagree on N")
    return objective_from_scores(pair_scores(x, ks, scorer), c)


def initialize_matchings(graphs: Sequence[PointGraph], ks: Mapping[tuple[int, int], AffinityMatrix],
                         params: RrwmParams = RrwmParams()) -> MatchingSet:
    if len(graphs) < 2:
        raise ContractError("need at least two graphs")
    return MatchingSet.from_pairs([g.n_nodes for g in graphs], solve_many(dict(ks), params))


def structure_change(c_prev: ClusterIndicator, c_next: ClusterIndicator) -> int:
    """Ordered count of off-diagonal entries that differ."""
    if c_prev.n_graphs != c_next.n_graphs:
        raise ContractError("indicators differ in size")
    return int((c_prev.selected != c_next.selected).sum())


def surrogate_from_scores(scores: np.ndarray, cfg: SolverConfig,
                          spectral: Optional[SpectralParams] = None) -> ClusterIndicator:
    if cfg.scheme == "hard":
        spectral = spectral or SpectralParams(seed=cfg.seed)
        return division_to_indicator(cluster_scores(scores, cfg.n_clusters, cfg.knn_k, spectral))
    return rank_indicator(scores, cfg.scheme, cfg.r)


def construct_surrogate(x: MatchingSet, ks: Mapping[tuple[int, int], AffinityMatrix], cfg: SolverConfig,
                        scorer: Optional[PairScorer] = None) -> ClusterIndicator:
    return surrogate_from_scores(pair_scores(x, ks, scorer), cfg)


def _floyd(ext: np.ndarray, reach: np.ndarray, scorer: PairScorer, sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Composition sweeps on a null-extended table; returns (table, improved-pair mask).

    ``reach`` starts as the supergraph adjacency and grows Floyd-Warshall style:
    once a path i-k-j has been examined, (i, j) may serve as a hop for later k.
    """
    n = ext.shape[0]
    ext = ext.copy()
    reach = reach.copy()
    improved = np.zeros((n, n), dtype=bool)
    cur = scorer.raw_scores(ext) / scorer.norm
    off = ~np.eye(n, dtype=bool)
    for _ in range(sweeps):
        for k in range(n):
            mask = reach[:, k][:, None] & reach[k, :][None, :] & off
            mask[k, :] = False
            mask[:, k] = False
            # candidates depend only on pairs touching k, which this step never rewrites
            iu, ju = np.nonzero(np.triu(mask, 1))
            if len(iu) == 0:
                continue
            rows = np.unique(iu)
            cand = np.take_along_axis(ext[k][None, :, :], ext[rows, k][:, None, :], axis=2)
            cand_scores = scorer.raw_scores(cand, rows=rows) / scorer.norm[rows]
            pos = np.searchsorted(rows, iu)
            better = cand_scores[pos, ju] > cur[iu, ju] + IMPROVE_EPS
            reach[iu, ju] = reach[ju, iu] = True
            if not better.any():
                continue
            bi, bj = iu[better], ju[better]
            new_rows = cand[pos[better], bj]
            ext[bi, bj] = new_rows
            ext[bj, bi] = _invert(new_rows, scorer.null)
            cur[bi, bj] = cand_scores[pos[better], bj]
            cur[bj, bi] = cur[bi, bj]
            improved[bi, bj] = improved[bj, bi] = True
    return ext, improved


def _invert(rows: np.ndarray, null: int) -> np.ndarray:
    """Transpose a batch of null-extended row->col maps."""
    out = np.full_like(rows, null)
    b = np.repeat(np.arange(len(rows)), rows.shape[1])
    r = np.tile(np.arange(rows.shape[1]), len(rows))
    c = rows.ravel()
    keep = c != null
    out[b[keep], c[keep]] = r[keep]
    return out


def maximize_composition(x: MatchingSet, c: ClusterIndicator, ks: Mapping[tuple[int, int], AffinityMatrix],
                         sweeps: int = 2, scorer: Optional[PairScorer] = None) -> MatchingSet:
    """Replace each reachable pair by its best path composition over the supergraph ``c``."""
    scorer = scorer or PairScorer(x.sizes, ks)
    ext, _ = _floyd(scorer.extend(x.table), c.selected, scorer, sweeps)
    return MatchingSet(x.sizes, PairScorer.shrink(ext, scorer.null))


class M3CResult:
    def __init__(self, matchings: MatchingSet, division: ClusterDivision, trace: RunTrace,
                 scores: np.ndarray, indicators: list[ClusterIndicator], proposals: list[ClusterIndicator]):
        self.matchings = matchings
        self.division = division
        self.trace = trace
        self.scores = scores
        self.indicators = indicators
        self.proposals = proposals

    def __iter__(self):
        return iter((self.matchings, self.division, self.trace))


def m3c_solve(graphs: Sequence[PointGraph], cfg: SolverConfig = SolverConfig(),
              ks: Optional[Mapping[tuple[int, int], AffinityMatrix]] = None,
              rrwm_params: RrwmParams = RrwmParams(),
              initial: Optional[MatchingSet] = None) -> M3CResult:
    """Run the full pipeline: affinities, initialization, MM iterations, final clustering.

    With ``cfg.monotone_guard`` a freshly ranked indicator is only adopted when
    it does not lower the objective on the current matchings, which keeps the
    recorded objective non-decreasing for every scheme. ``proposals`` holds the
    raw indicator produced by the scheme at each step.
    """
    n = len(graphs)
    if n < 2:
        raise ConfigError("need at least two graphs")
    if cfg.n_clusters > n:
        raise ConfigError(f"{cfg.n_clusters} clusters requested for {n} graphs")
    if ks is None:
        ks = build_all_affinities(graphs, cfg.beta, cfg.sigma_sq)
    t0 = time.perf_counter()
    x = initial if initial is not None else initialize_matchings(graphs, ks, rrwm_params)
    scorer = PairScorer(x.sizes, ks)
    spectral = SpectralParams(seed=cfg.seed)
    ext = scorer.extend(x.table)
    scores = scorer.scores(ext)

    def surrogate(scores, previous):
        proposal = surrogate_from_scores(scores, cfg, spectral)
        chosen = proposal
        if cfg.monotone_guard and previous is not None:
            if objective_from_scores(scores, proposal) < objective_from_scores(scores, previous):
                chosen = previous
        return proposal, chosen

    proposal, c = surrogate(scores, None)
    proposals, indicators = [proposal], [c]
    trace = RunTrace([IterationRecord(0, objective_from_scores(scores, c), 0, c.n_selected(), 0,
                                      time.perf_counter() - t0)])
    for t in range(1, cfg.max_iters + 1):
        t_start = time.perf_counter()
        ext, improved = _floyd(ext, c.selected, scorer, cfg.floyd_sweeps)
        scores = scorer.scores(ext)
        proposal, c_next = surrogate(scores, c)
        change = structure_change(c, c_next)
        proposals.append(proposal)
        indicators.append(c_next)
        n_improved = int(np.triu(improved, 1).sum())
        trace.records.append(IterationRecord(
            t, objective_from_scores(scores, c_next), change, c_next.n_selected(), n_improved,
            time.perf_counter() - t_start))
        c = c_next
        if change == 0 and n_improved == 0:
            break
    x = MatchingSet(x.sizes, PairScorer.shrink(ext, scorer.null))
    division = cluster_scores(scores, cfg.n_clusters, cfg.knn_k, spectral)
    return M3CResult(x, division, trace, scores, indicators, proposals)
