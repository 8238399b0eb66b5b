import itertools
import json

import numpy as np
import pytest

from m3c.bench.delaunay import bowyer_watson, delaunay, in_circumcircle
from m3c.bench.experiment import aggregate, evaluate, results_document, run_experiment
from m3c.bench.io import (
    Dataset,
    ParseError,
    VersionError,
    dataset_from_json,
    dataset_to_json,
    load_dataset,
    prediction_from_json,
    prediction_to_json,
    save_dataset,
)
from m3c.bench.synth import SynthConfig, gt_from_keypoints, synth_generate
from m3c.core import ConfigError, ContractError, SolverConfig, compose
from m3c.indicator import check_transitive, division_to_indicator

from oracles import delaunay_edges


def test_delaunay_examples():
    assert delaunay([[0, 0], [1, 0], [0, 1]]) == {(0, 1), (0, 2), (1, 2)}
    assert len(delaunay([[0, 0], [1, 0], [0, 1], [2, 2]])) == 5
    assert delaunay([[0, 0], [1, 0], [0, 1], [2, 2]]) == delaunay_edges(np.array([[0, 0], [1, 0], [0, 1], [2, 2.0]]))
    assert delaunay([[0.5, 0.5]]) == set()
    assert delaunay([[0, 0], [1, 1]]) == {(0, 1)}
    with pytest.raises(ContractError):
        delaunay([[0, 0], [1, 1], [0, 0]])


@pytest.mark.parametrize("n", range(3, 13))
def test_delaunay_matches_empty_circle_oracle(n):
    rng = np.random.default_rng(n)
    for _ in range(15):
        pts = rng.uniform(0, 1, (n, 2))
        edges = delaunay(pts)
        assert edges == delaunay_edges(pts)
        for a, b, c in bowyer_watson(pts):
            assert not any(in_circumcircle(pts[a], pts[b], pts[c], pts[p]) for p in range(n) if p not in (a, b, c))


def test_delaunay_collinear_gives_the_path():
    assert delaunay([[2, 2], [0, 0], [3, 3], [1, 1]]) == {(0, 3), (1, 3), (0, 2)}
    assert delaunay([[0, 1], [0, 0], [0, 2]]) == {(0, 1), (0, 2)}


def test_delaunay_cocircular_square():
    edges = delaunay([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert {(0, 1), (1, 2), (2, 3), (0, 3)} <= edges and len(edges) == 5


def test_synth_counts_and_determinism():
    cfg = SynthConfig(n_classes=3, graphs_per_class=(2, 3, 4), n_inliers=6, n_outliers=2, seed=9)
    graphs, gt_x, gt_div = synth_generate(cfg)
    assert len(graphs) == 9 and all(g.n_nodes == 8 for g in graphs)
    assert gt_div.sizes() == [2, 3, 4]
    again = synth_generate(cfg)
    assert graphs == again[0] and gt_x == again[1] and gt_div == again[2]
    assert check_transitive(division_to_indicator(gt_div))


def test_synth_noiseless_graphs_are_permuted_copies():
    graphs, _, _ = synth_generate(SynthConfig(n_classes=2, graphs_per_class=3, n_outliers=0, deform_sigma=0.0, seed=1))
    for g in graphs[1:3]:
        order_a = np.argsort(graphs[0].keypoint_ids)
        order_b = np.argsort(g.keypoint_ids)
        np.testing.assert_array_equal(graphs[0].points[order_a], g.points[order_b])


def test_synth_gt_is_cycle_consistent():
    graphs, gt_x, gt_div = synth_generate(SynthConfig(seed=2))
    labels = gt_div.labels
    n = len(graphs)
    for i, j, k in itertools.permutations(range(n), 3):
        if labels[i] == labels[j] == labels[k]:
            assert compose(gt_x[i, k], gt_x[k, j]) == gt_x[i, j]
        if labels[i] != labels[j]:
            assert gt_x[i, j].matches == {}
    assert all(len(gt_x[i, j]) == 10 for i in range(n) for j in range(n) if i != j and labels[i] == labels[j])


def test_synth_config_validation():
    for bad in ({"n_classes": 0}, {"graphs_per_class": 0}, {"n_inliers": 0}, {"n_outliers": -1},
                {"deform_sigma": -0.1}, {"graphs_per_class": (3, 3)}):
        with pytest.raises(ConfigError):
            SynthConfig(**bad)


def test_dataset_round_trip_is_exact(tmp_path):
    graphs, gt_x, gt_div = synth_generate(SynthConfig(seed=3))
    path = tmp_path / "d.json"
    save_dataset(path, graphs)
    data = load_dataset(path)
    assert data.graphs == graphs
    assert data.gt_matchings == gt_x and data.gt_division == gt_div
    for a, b in zip(graphs, data.graphs):
        assert a.points.tobytes() == b.points.tobytes()


def test_dataset_parse_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"version": 1,\n "graphs": [\n')
    with pytest.raises(ParseError, match="line"):
        load_dataset(path)
    with pytest.raises(ParseError, match="'car3'.*points"):
        dataset_from_json({"version": 1, "graphs": [{"id": "car3", "edges": []}]})
    with pytest.raises(VersionError):
        dataset_from_json({"version": 99, "graphs": []})
    with pytest.raises(VersionError):
        dataset_from_json({"graphs": []})
    with pytest.raises(ParseError, match="'g'"):
        dataset_from_json({"version": 1, "graphs": [{"id": "g", "points": [[0, 0], [1, 1]], "edges": [[0, 5]]}]})
    with pytest.raises(ParseError, match="unique"):
        dataset_from_json({"version": 1, "graphs": [{"id": "g", "points": [[0, 0]]}] * 2})
    with pytest.raises(ParseError):
        dataset_from_json({"version": 1, "graphs": [{"id": "g", "points": [[0, "x"]]}]})


def test_dataset_without_gt_and_with_default_keypoints():
    pts = [[0.1, 0.1], [0.8, 0.2], [0.4, 0.9], [0.5, 0.5]]
    doc = {"version": 1, "graphs": [{"id": "a", "points": pts}, {"id": "b", "points": pts}]}
    data = dataset_from_json(doc)
    assert data.gt_matchings is None and data.gt_division is None
    assert data.graphs[0].edges == tuple(sorted(delaunay(np.array(pts))))
    scores = evaluate(None, None, None, None)
    assert scores == {"ma": None, "cp": None, "ri": None, "ca": None}
    doc = {"version": 1, "graphs": [{"id": g, "class": "duck", "n_inliers": 3, "points": pts} for g in "ab"]}
    data = dataset_from_json(doc)
    assert data.graphs[0].keypoint_ids == (0, 1, 2, None)
    assert data.gt_matchings[0, 1].matches == {0: 0, 1: 1, 2: 2}


def test_prediction_round_trip():
    graphs, gt_x, gt_div = synth_generate(SynthConfig(n_classes=2, graphs_per_class=2, seed=4))
    doc = json.loads(json.dumps(prediction_to_json(gt_x, gt_div)))
    x, d = prediction_from_json(doc)
    assert x == gt_x and d == gt_div
    with pytest.raises(ParseError):
        prediction_from_json({"sizes": [2], "labels": [0]})
    with pytest.raises(ParseError):
        prediction_from_json({"sizes": [2, 2], "labels": [0, 0], "matchings": {"0,1": [1, 1]}})
    with pytest.raises(ParseError):
        prediction_from_json({"sizes": [2, 2], "labels": [0, 0], "matchings": {"1,0": [1, 0]}})


def test_run_experiment_single_and_repeatable():
    synth = SynthConfig(n_classes=2, graphs_per_class=3, seed=10)
    cfg = SolverConfig(n_clusters=2)
    one = run_experiment(synth, cfg, 1)
    assert len(one) == 1 and one[0].data_seed == 10
    a = run_experiment(synth, cfg, 3)
    b = run_experiment(synth, cfg, 3)
    assert [r.data_seed for r in a] == [10, 11, 12]
    doc_a, doc_b = results_document(a, {}), results_document(b, {})
    assert json.dumps(doc_a) == json.dumps(doc_b)
    summary = aggregate(a)
    for key in ("ma", "cp", "ri", "ca"):
        vals = [getattr(r, key) for r in a]
        assert summary[key]["mean"] == pytest.approx(sum(vals) / 3)
        assert summary[key]["std"] == pytest.approx(np.std(vals))
    with pytest.raises(ValueError):
        run_experiment(synth, cfg, 0)


def test_run_experiment_on_fixed_dataset_varies_solver_seed():
    graphs, gt_x, gt_div = synth_generate(SynthConfig(n_classes=2, graphs_per_class=3, seed=11))
    res = run_experiment(Dataset(graphs, gt_x, gt_div), SolverConfig(n_clusters=2, seed=5), 2)
    assert [r.solver_seed for r in res] == [5, 6] and res[0].data_seed is None
    assert res[0].config["score_normalization"] == "min(n_i, n_j)"
    doc = res[0].to_json(timing=True)
    assert "seconds" in doc and "seconds" in doc["trace"][0]
    assert "seconds" not in res[0].to_json()["trace"][0]
