"""Synthetic mixtures of keypoint graphs with planted matchings and clusters."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core import ClusterDivision, ConfigError, MatchingSet, PointGraph
from .delaunay import delaunay


@dataclass(frozen=True)
class SynthConfig:
    n_classes: int = 3
    graphs_per_class: int | tuple[int, ...] = 8
    n_inliers: int = 10
    n_outliers: int = 2
    deform_sigma: float = 0.03
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.graphs_per_class, (list, tuple)):
            object.__setattr__(self, "graphs_per_class", tuple(int(g) for g in self.graphs_per_class))
            if len(self.graphs_per_class) != self.n_classes:
                raise ConfigError("per-class graph counts must list one count per class")
        if self.n_classes < 1 or min(self.class_sizes) < 1 or self.n_inliers < 1:
            raise ConfigError("class, graph and inlier counts must be >= 1")
        if self.n_outliers < 0 or self.deform_sigma < 0:
            raise ConfigError("n_outliers and deform_sigma must be >= 0")

    @property
    def class_sizes(self) -> tuple[int, ...]:
        g = self.graphs_per_class
        return g if isinstance(g, tuple) else (g,) * self.n_classes

    def with_seed(self, seed: int) -> "SynthConfig":
        return SynthConfig(self.n_classes, self.graphs_per_class, self.n_inliers, self.n_outliers,
                           self.deform_sigma, seed)


def gt_from_keypoints(graphs: Sequence[PointGraph]) -> MatchingSet:
    """Planted matchings: nodes sharing a keypoint id within one class correspond."""
    sizes = [g.n_nodes for g in graphs]
    n = len(graphs)
    table = MatchingSet(sizes).table.copy()
    for i, gi in enumerate(graphs):
        for j, gj in enumerate(graphs):
            if i == j:
                continue
            table[i, j] = -1
            if gi.class_label is None or gi.class_label != gj.class_label:
                continue
            if gi.keypoint_ids is None or gj.keypoint_ids is None:
                continue
            where = {kp: c for c, kp in enumerate(gj.keypoint_ids) if kp is not None}
            for r, kp in enumerate(gi.keypoint_ids):
                if kp is not None and kp in where:
                    table[i, j, r] = where[kp]
    return MatchingSet(sizes, table)


def synth_generate(cfg: SynthConfig):
    """Returns ``(graphs, gt_matchings, gt_division)``; deterministic in ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    graphs: list[PointGraph] = []
    labels: list[int] = []
    for cls, count in enumerate(cfg.class_sizes):
        proto = rng.uniform(0, 1, (cfg.n_inliers, 2))
        for g in range(count):
            inl = proto + rng.normal(0, cfg.deform_sigma, proto.shape) if cfg.deform_sigma > 0 else proto.copy()
            out = rng.uniform(0, 1, (cfg.n_outliers, 2))
            pts = np.vstack([inl, out])
            kp: list[Optional[int]] = list(range(cfg.n_inliers)) + [None] * cfg.n_outliers
            perm = rng.permutation(len(pts))
            pts = pts[perm]
            kp = [kp[p] for p in perm]
            graphs.append(PointGraph(
                id=f"c{cls}g{g}",
                points=pts,
                edges=tuple(delaunay(pts)),
                class_label=str(cls),
                inlier_count=cfg.n_inliers,
                keypoint_ids=tuple(kp),
            ))
            labels.append(cls)
    return graphs, gt_from_keypoints(graphs), ClusterDivision(tuple(labels), cfg.n_classes)
