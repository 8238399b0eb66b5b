"""Versioned JSON datasets and result files.

Dataset layout::

    {"version": 1,
     "graphs": [{"id": ..., "class": ..., "n_inliers": ..., "points": [[x, y], ...],
                 "edges": [[a, b], ...], "keypoints": [k or null, ...]}, ...]}

Only ``id`` and ``points`` are required. Missing edges are rebuilt by Delaunay
triangulation. ``keypoints`` ties nodes across graphs of one class; without it,
the first ``n_inliers`` nodes of each graph are taken to be keypoints
``0..n_inliers-1`` in order, which is how annotated keypoint files are laid out.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from ..core import Assignment, ClusterDivision, ContractError, MatchingSet, PointGraph
from .delaunay import delaunay
from .synth import gt_from_keypoints

FORMAT_VERSION = 1


class ParseError(ValueError):
    """Malformed dataset or prediction file."""


class VersionError(ParseError):
    pass


@dataclass(eq=False)
class Dataset:
    graphs: list[PointGraph]
    gt_matchings: Optional[MatchingSet] = None
    gt_division: Optional[ClusterDivision] = None


def _graph_to_json(g: PointGraph) -> dict:
    out: dict[str, Any] = {"id": g.id}
    if g.class_label is not None:
        out["class"] = g.class_label
    if g.inlier_count is not None:
        out["n_inliers"] = g.inlier_count
    # repr of a Python float is the shortest string that round-trips bit-exactly
    out["points"] = [[float(x), float(y)] for x, y in g.points]
    out["edges"] = [[a, b] for a, b in g.edges]
    if g.keypoint_ids is not None:
        out["keypoints"] = list(g.keypoint_ids)
    return out


def dataset_to_json(graphs: Sequence[PointGraph]) -> dict:
    return {"version": FORMAT_VERSION, "graphs": [_graph_to_json(g) for g in graphs]}


def save_dataset(path, graphs: Sequence[PointGraph]) -> None:
    Path(path).write_text(json.dumps(dataset_to_json(graphs), indent=1) + "\n")


def _field(entry: dict, name: str, gid: str, required: bool = True):
    if name not in entry:
        if required:
            raise ParseError(f"graph {gid!r}: missing field {name!r}")
        return None
    return entry[name]


def _graph_from_json(entry: Any, index: int) -> PointGraph:
    if not isinstance(entry, dict):
        raise ParseError(f"graphs[{index}]: expected an object")
    gid = str(entry.get("id", f"#{index}"))
    if "id" not in entry:
        raise ParseError(f"graphs[{index}]: missing field 'id'")
    raw_points = _field(entry, "points", gid)
    try:
        points = np.asarray(raw_points, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"graph {gid!r}: field 'points' is not a list of [x, y] pairs") from exc
    if points.ndim != 2 or points.shape[1] != 2 or len(points) == 0:
        raise ParseError(f"graph {gid!r}: field 'points' is not a non-empty list of [x, y] pairs")
    if not np.isfinite(points).all():
        raise ParseError(f"graph {gid!r}: field 'points' has non-finite values")
    label = _field(entry, "class", gid, required=False)
    n_inliers = _field(entry, "n_inliers", gid, required=False)
    keypoints = _field(entry, "keypoints", gid, required=False)
    raw_edges = _field(entry, "edges", gid, required=False)
    try:
        if raw_edges is None:
            edges = tuple(delaunay(points))
        else:
            edges = tuple((int(a), int(b)) for a, b in raw_edges)
        if keypoints is None and n_inliers is not None:
            keypoints = list(range(int(n_inliers))) + [None] * (len(points) - int(n_inliers))
        return PointGraph(
            id=gid,
            points=points,
            edges=edges,
            class_label=None if label is None else str(label),
            inlier_count=None if n_inliers is None else int(n_inliers),
            keypoint_ids=None if keypoints is None else tuple(None if k is None else int(k) for k in keypoints),
        )
    except (ContractError, TypeError, ValueError) as exc:
        raise ParseError(f"graph {gid!r}: {exc}") from exc


def dataset_from_json(doc: Any) -> Dataset:
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if "version" not in doc:
        raise VersionError("missing field 'version'")
    if doc["version"] != FORMAT_VERSION:
        raise VersionError(f"unsupported version {doc['version']!r}; expected {FORMAT_VERSION}")
    entries = doc.get("graphs")
    if not isinstance(entries, list) or not entries:
        raise ParseError("field 'graphs' must be a non-empty list")
    graphs = [_graph_from_json(e, i) for i, e in enumerate(entries)]
    ids = [g.id for g in graphs]
    if len(set(ids)) != len(ids):
        raise ParseError("graph ids must be unique")
    division = None
    if all(g.class_label is not None for g in graphs):
        division = ClusterDivision.from_labels([g.class_label for g in graphs])
    matchings = None
    if division is not None and all(g.keypoint_ids is not None for g in graphs):
        matchings = gt_from_keypoints(graphs)
    return Dataset(graphs, matchings, division)


def load_dataset(path) -> Dataset:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return dataset_from_json(doc)


def prediction_to_json(matchings: MatchingSet, division: ClusterDivision) -> dict:
    """Upper-triangle assignments as dense row->col lists (``-1`` unmatched) plus labels."""
    n = matchings.n_graphs
    pairs = {
        f"{i},{j}": matchings.table[i, j, : matchings.sizes[i]].tolist()
        for i in range(n)
        for j in range(i + 1, n)
    }
    return {"sizes": list(matchings.sizes), "labels": list(division.labels), "matchings": pairs}


def prediction_from_json(doc: Any) -> tuple[MatchingSet, ClusterDivision]:
    try:
        sizes = [int(s) for s in doc["sizes"]]
        division = ClusterDivision.from_labels(doc["labels"])
        pairs = {}
        for key, row in doc["matchings"].items():
            i, j = (int(v) for v in key.split(","))
            if not 0 <= i < j < len(sizes):
                raise ParseError(f"matchings[{key!r}]: bad pair")
            pairs[i, j] = Assignment.from_array([int(c) for c in row], sizes[j])
        matchings = MatchingSet.from_pairs(sizes, pairs)
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"malformed prediction: {exc}") from exc
    if division.n_graphs != len(sizes):
        raise ParseError("labels and sizes disagree on the number of graphs")
    return matchings, division


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def write_csv(path, rows: Sequence[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
