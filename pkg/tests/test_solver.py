import itertools

import numpy as np
import pytest

import m3c.pairwise as pairwise
from m3c.affinity import PairScorer, build_all_affinities, normalized_score, pair_affinity
from m3c.bench.delaunay import delaunay
from m3c.bench.synth import SynthConfig, synth_generate
from m3c.core import (
    AffinityMatrix,
    Assignment,
    ClusterDivision,
    ClusterIndicator,
    ConfigError,
    ContractError,
    MatchingSet,
    PointGraph,
    SolverConfig,
    compose,
)
from m3c.indicator import division_to_indicator
from m3c.metrics import clustering_accuracy, matching_accuracy
from m3c.solver import (
    IMPROVE_EPS,
    construct_surrogate,
    initialize_matchings,
    joint_objective,
    m3c_solve,
    maximize_composition,
    pair_scores,
    structure_change,
)

NO_EDGES = np.zeros((0, 2))


def node_only(node):
    return AffinityMatrix(np.asarray(node, float), NO_EDGES, NO_EDGES, np.zeros((0, 0)))


def reference_floyd(x, c, ks, sweeps):
    """Sequential pass over ordered pairs in (k, i, j) order."""
    n = x.n_graphs
    reach = c.selected.copy()
    for _ in range(sweeps):
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    if len({i, j, k}) < 3 or not (reach[i, k] and reach[k, j]):
                        continue
                    reach[i, j] = reach[j, i] = True
                    cand = compose(x[i, k], x[k, j])
                    k_ij = pair_affinity(ks, i, j)
                    if normalized_score(cand, k_ij) > normalized_score(x[i, j], k_ij) + IMPROVE_EPS:
                        x = x.replace(i, j, cand)
    return x


def random_instance(seed, n_graphs=5, sizes=(4, 7)):
    rng = np.random.default_rng(seed)
    graphs = []
    for g in range(n_graphs):
        pts = rng.uniform(0, 1, (int(rng.integers(*sizes)), 2))
        graphs.append(PointGraph(f"g{g}", pts, tuple(delaunay(pts))))
    ks = build_all_affinities(graphs)
    pairs = {}
    for i, j in ks:
        ni, nj = graphs[i].n_nodes, graphs[j].n_nodes
        m = min(ni, nj)
        pairs[i, j] = Assignment(ni, nj, dict(zip(rng.permutation(ni)[:m].tolist(), rng.permutation(nj)[:m].tolist())))
    return graphs, ks, MatchingSet.from_pairs([g.n_nodes for g in graphs], pairs), rng


def triangle_setup():
    tri = np.array([[0.1, 0.1], [0.9, 0.2], [0.35, 0.8]])
    perms = [np.arange(3), np.array([2, 0, 1]), np.array([1, 2, 0])]
    graphs = []
    for g, p in enumerate(perms):
        pts = np.empty_like(tri)
        pts[p] = tri  # prototype node r sits at index p[r]
        graphs.append(PointGraph(f"t{g}", pts, ((0, 1), (0, 2), (1, 2))))
    gt = {(i, j): Assignment(3, 3, {int(perms[i][r]): int(perms[j][r]) for r in range(3)})
          for i in range(3) for j in range(i + 1, 3)}
    return graphs, build_all_affinities(graphs), gt


def test_joint_objective_examples():
    ks = {(0, 1): node_only(0.5 * np.eye(2))}
    x = MatchingSet.from_pairs([2, 2], {(0, 1): Assignment.identity(2)})
    assert joint_objective(x, ClusterIndicator.from_pairs(2, [(0, 1)]), ks) == pytest.approx(0.5)
    assert joint_objective(x, ClusterIndicator.identity(2), ks) == 0.0
    with pytest.raises(ContractError):
        joint_objective(x, ClusterIndicator.identity(3), ks)


def test_joint_objective_all_pairs_is_mean_score():
    graphs, ks, x, _ = random_instance(0)
    j = pair_scores(x, ks)
    full = ClusterIndicator(np.ones((5, 5), dtype=bool))
    assert joint_objective(x, full, ks) == pytest.approx(j[~np.eye(5, dtype=bool)].mean())


def test_initialize_matchings_counts_and_symmetry(monkeypatch):
    graphs, ks, _, _ = random_instance(1, n_graphs=5)
    calls = []
    real = pairwise.hungarian
    monkeypatch.setattr(pairwise, "hungarian", lambda s: calls.append(1) or real(s))
    x = initialize_matchings(graphs, ks)
    assert len(calls) == 10
    assert x.is_symmetric()
    with pytest.raises(ContractError):
        initialize_matchings(graphs[:1], {})


def test_initialize_matchings_small_cases():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 1, (8, 2))
    perm = rng.permutation(8)
    pts2 = np.empty_like(pts)
    pts2[perm] = pts
    g1, g2 = PointGraph("a", pts, tuple(delaunay(pts))), PointGraph("b", pts2, tuple(delaunay(pts2)))
    x = initialize_matchings([g1, g2], build_all_affinities([g1, g2]))
    assert x[0, 1].matches == dict(enumerate(perm.tolist()))
    singles = [PointGraph(f"s{i}", [[0.1 * i, 0.2]], ()) for i in range(3)]
    x = initialize_matchings(singles, build_all_affinities(singles))
    assert all(x[i, j].matches == {0: 0} for i in range(3) for j in range(3))


def test_structure_change_examples():
    c = ClusterIndicator.from_pairs(4, [(0, 1)])
    assert structure_change(c, c) == 0
    assert structure_change(c, ClusterIndicator.identity(4)) == 2
    assert structure_change(ClusterIndicator(np.ones((3, 3), dtype=bool)), ClusterIndicator.identity(3)) == 6
    with pytest.raises(ContractError):
        structure_change(c, ClusterIndicator.identity(3))


def test_construct_surrogate_examples():
    graphs, ks, x, _ = random_instance(3)
    full = construct_surrogate(x, ks, SolverConfig(scheme="global", r=1.0))
    assert full == ClusterIndicator(np.ones((5, 5), dtype=bool))


def test_construct_surrogate_fuse_on_three_graphs():
    # node-only affinities that reproduce J01 = 0.9, J02 = 0.5, J12 = 0.1 under identity matchings
    ks = {(0, 1): node_only(0.9 * np.eye(2)), (0, 2): node_only(0.5 * np.eye(2)), (1, 2): node_only(0.1 * np.eye(2))}
    x = MatchingSet.from_pairs([2, 2, 2], {p: Assignment.identity(2) for p in ks})
    np.testing.assert_allclose(pair_scores(x, ks)[0], [0, 0.9, 0.5])
    c = construct_surrogate(x, ks, SolverConfig(scheme="fuse", r=0.5))
    assert set(c.pairs()) == {(0, 1), (0, 2)}


def test_construct_surrogate_hard_blocks():
    labels = [0, 0, 0, 1, 1, 1]
    ks, pairs = {}, {}
    for i, j in itertools.combinations(range(6), 2):
        v = 0.9 if labels[i] == labels[j] else 0.01
        ks[i, j] = node_only(v * np.eye(2))
        pairs[i, j] = Assignment.identity(2)
    x = MatchingSet.from_pairs([2] * 6, pairs)
    c = construct_surrogate(x, ks, SolverConfig(scheme="hard", n_clusters=2))
    assert c == division_to_indicator(ClusterDivision(tuple(labels), 2))


def test_maximize_with_identity_indicator_is_noop():
    graphs, ks, x, _ = random_instance(4)
    assert maximize_composition(x, ClusterIndicator.identity(5), ks) == x


def test_maximize_repairs_a_wrong_pair():
    graphs, ks, gt = triangle_setup()
    wrong = Assignment(3, 3, {r: c for r, c in zip(range(3), [gt[0, 2].matches[1], gt[0, 2].matches[2], gt[0, 2].matches[0]])})
    x = MatchingSet.from_pairs([3, 3, 3], {**gt, (0, 2): wrong})
    assert compose(x[0, 1], x[1, 2]) == gt[0, 2]
    out = maximize_composition(x, ClusterIndicator(np.ones((3, 3), dtype=bool)), ks)
    assert out[0, 2] == gt[0, 2]
    best = max(normalized_score(Assignment(3, 3, dict(enumerate(p))), ks[0, 2]) for p in itertools.permutations(range(3)))
    assert normalized_score(out[0, 2], ks[0, 2]) == pytest.approx(best)
    assert out.is_symmetric()


def test_maximize_keeps_optimal_matchings():
    graphs, ks, gt = triangle_setup()
    x = MatchingSet.from_pairs([3, 3, 3], gt)
    assert maximize_composition(x, ClusterIndicator(np.ones((3, 3), dtype=bool)), ks) == x


@pytest.mark.parametrize("seed", range(30))
def test_maximize_matches_sequential_reference(seed):
    graphs, ks, x, rng = random_instance(100 + seed, n_graphs=int(4 + seed % 3))
    n = x.n_graphs
    iu = list(zip(*np.triu_indices(n, 1)))
    keep = rng.uniform(size=len(iu)) < 0.5
    c = ClusterIndicator.from_pairs(n, [p for p, k in zip(iu, keep) if k])
    sweeps = 1 + seed % 2
    fast = maximize_composition(x, c, ks, sweeps=sweeps)
    slow = reference_floyd(x, c, ks, sweeps)
    np.testing.assert_array_equal(fast.table, slow.table)


@pytest.mark.parametrize("seed", range(8))
def test_maximize_never_lowers_pair_scores(seed):
    graphs, ks, x, rng = random_instance(200 + seed, n_graphs=6)
    c = ClusterIndicator.from_pairs(6, [p for p in zip(*np.triu_indices(6, 1)) if rng.uniform() < 0.6])
    before = pair_scores(x, ks)
    out = maximize_composition(x, c, ks)
    assert (pair_scores(out, ks) >= before - 1e-12).all()
    assert out.is_symmetric()


def test_maximize_stays_inside_blocks():
    graphs, ks, x, _ = random_instance(5, n_graphs=6)
    c = division_to_indicator(ClusterDivision((0, 0, 0, 1, 1, 1), 2))
    out = maximize_composition(x, c, ks)
    for i in range(3):
        for j in range(3, 6):
            assert out[i, j] == x[i, j]
    assert out != x  # something inside the blocks did improve


def test_solve_noiseless_is_exact():
    cfg = SynthConfig(n_classes=2, graphs_per_class=3, n_outliers=0, deform_sigma=0.0, seed=3)
    graphs, gt_x, gt_div = synth_generate(cfg)
    x, division, trace = m3c_solve(graphs, SolverConfig(n_clusters=2))
    assert matching_accuracy(x, gt_x, division_to_indicator(gt_div)) == 1.0
    assert clustering_accuracy(division, gt_div) == 1.0


def test_solve_single_iteration_equals_one_round():
    graphs, _, _ = synth_generate(SynthConfig(n_classes=2, graphs_per_class=3, seed=4))
    ks = build_all_affinities(graphs)
    x0 = initialize_matchings(graphs, ks)
    cfg = SolverConfig(n_clusters=2, max_iters=1, scheme="global", r=0.5)
    res = m3c_solve(graphs, cfg, ks=ks)
    assert len(res.trace.records) == 2
    c1 = construct_surrogate(x0, ks, cfg)
    assert res.indicators[0] == c1
    assert res.matchings == maximize_composition(x0, c1, ks, cfg.floyd_sweeps)


@pytest.mark.parametrize("scheme", ["hard", "global", "local", "fuse"])
def test_solve_trace_is_monotone(scheme):
    graphs, _, _ = synth_generate(SynthConfig(n_classes=2, graphs_per_class=4, seed=5))
    res = m3c_solve(graphs, SolverConfig(scheme=scheme, r=0.3 if scheme != "fuse" else "auto"))
    assert res.trace.is_monotone()
    assert res.trace.records[0].iteration == 0
    assert res.matchings.is_symmetric()


def test_solve_config_errors():
    graphs, _, _ = synth_generate(SynthConfig(n_classes=1, graphs_per_class=3, seed=6))
    with pytest.raises(ConfigError):
        m3c_solve(graphs, SolverConfig(n_clusters=4))
    with pytest.raises(ConfigError):
        m3c_solve(graphs[:1], SolverConfig(n_clusters=1))


def test_pair_scorer_reuse_gives_same_scores():
    graphs, ks, x, _ = random_instance(7)
    scorer = PairScorer(x.sizes, ks)
    np.testing.assert_array_equal(pair_scores(x, ks), pair_scores(x, ks, scorer))
