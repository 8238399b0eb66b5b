"""Domain types shared across the package and partial-permutation algebra.

Assignments are sparse ``row -> col`` maps. Unmatched rows and columns are
simply absent from the map, so injectivity is a structural property that
:func:`validate` can check directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np


class ContractError(ValueError):
    """Raised when an operation's preconditions are violated."""


class ConfigError(ValueError):
    """Raised for invalid solver or benchmark configuration."""


@dataclass(frozen=True, eq=False)
class PointGraph:
    """A keypoint graph: 2-D coordinates plus undirected edges."""

    id: str
    points: np.ndarray
    edges: tuple[tuple[int, int], ...]
    class_label: Optional[str] = None
    inlier_count: Optional[int] = None
    keypoint_ids: Optional[tuple[Optional[int], ...]] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        n = len(pts)
        if n == 0:
            raise ContractError(f"graph {self.id!r} has no nodes")
        canon = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ContractError(f"graph {self.id!r}: self-loop at node {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ContractError(f"graph {self.id!r}: edge ({a}, {b}) out of range")
            canon.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        if self.inlier_count is not None and not 0 <= self.inlier_count <= n:
            raise ContractError(f"graph {self.id!r}: inlier_count {self.inlier_count} > {n} nodes")
        if self.keypoint_ids is not None:
            if len(self.keypoint_ids) != n:
                raise ContractError(f"graph {self.id!r}: keypoint_ids length mismatch")
            kp = tuple(self.keypoint_ids)
            named = [k for k in kp if k is not None]
            if len(set(named)) != len(named):
                raise ContractError(f"graph {self.id!r}: repeated keypoint id")
            object.__setattr__(self, "keypoint_ids", kp)

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, PointGraph):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.points, other.points)
            and self.edges == other.edges
            and self.class_label == other.class_label
            and self.inlier_count == other.inlier_count
            and self.keypoint_ids == other.keypoint_ids
        )

    __hash__ = None


@dataclass(frozen=True)
class Assignment:
    """A (partial) injective node correspondence between two graphs."""

    rows: int
    cols: int
    matches: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "matches", {int(r): int(c) for r, c in dict(self.matches).items()})

    __hash__ = None

    @classmethod
    def identity(cls, n: int) -> "Assignment":
        return cls(n, n, {i: i for i in range(n)})

    @classmethod
    def from_array(cls, row_to_col: Sequence[int], cols: int) -> "Assignment":
        """Build from a dense row->col vector where negative entries mean unmatched."""
        return cls(len(row_to_col), cols, {r: int(c) for r, c in enumerate(row_to_col) if c >= 0})

    @classmethod
    def from_matrix(cls, x: np.ndarray) -> "Assignment":
        x = np.asarray(x)
        rows, cols = np.nonzero(x)
        return cls(x.shape[0], x.shape[1], dict(zip(rows.tolist(), cols.tolist())))

    def to_array(self) -> np.ndarray:
        out = np.full(self.rows, -1, dtype=np.int64)
        for r, c in self.matches.items():
            out[r] = c
        return out

    def to_matrix(self) -> np.ndarray:
        x = np.zeros((self.rows, self.cols))
        for r, c in self.matches.items():
            x[r, c] = 1.0
        return x

    def __len__(self):
        return len(self.matches)


def compose(x_ik: Assignment, x_kj: Assignment) -> Assignment:
    """Chain two assignments: ``r -> c`` iff ``r -> m`` in ``x_ik`` and ``m -> c`` in ``x_kj``."""
    if x_ik.cols != x_kj.rows:
        raise ContractError(f"cannot compose {x_ik.rows}x{x_ik.cols} with {x_kj.rows}x{x_kj.cols}")
    out = {}
    for r, m in x_ik.matches.items():
        c = x_kj.matches.get(m)
        if c is not None:
            out[r] = c
    return Assignment(x_ik.rows, x_kj.cols, out)


def transpose(x: Assignment) -> Assignment:
    return Assignment(x.cols, x.rows, {c: r for r, c in x.matches.items()})


def validate(x: Assignment) -> bool:
    """True iff every match is in range and no column is used twice."""
    seen = set()
    for r, c in x.matches.items():
        if not (0 <= r < x.rows and 0 <= c < x.cols) or c in seen:
            return False
        seen.add(c)
    return True


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    """Factored Lawler affinity for one ordered graph pair.

    ``edge_affinity[p, q]`` is the affinity between edge ``p`` of the first
    graph and edge ``q`` of the second, with edges listed in ``edges_i`` /
    ``edges_j`` as canonical ``(a, b)`` pairs, ``a < b``. The implied full
    Lawler matrix places this value at both orientations of the edge pair.
    """

    node_affinity: np.ndarray
    edges_i: np.ndarray
    edges_j: np.ndarray
    edge_affinity: np.ndarray

    def __post_init__(self):
        node = np.asarray(self.node_affinity, dtype=float)
        ei = np.asarray(self.edges_i, dtype=np.int64).reshape(-1, 2)
        ej = np.asarray(self.edges_j, dtype=np.int64).reshape(-1, 2)
        ea = np.asarray(self.edge_affinity, dtype=float).reshape(len(ei), len(ej))
        for arr in (node, ei, ej, ea):
            arr.setflags(write=False)
        object.__setattr__(self, "node_affinity", node)
        object.__setattr__(self, "edges_i", ei)
        object.__setattr__(self, "edges_j", ej)
        object.__setattr__(self, "edge_affinity", ea)

    @property
    def shape(self) -> tuple[int, int]:
        return self.node_affinity.shape

    def transposed(self) -> "AffinityMatrix":
        return AffinityMatrix(self.node_affinity.T, self.edges_j, self.edges_i, self.edge_affinity.T)


class MatchingSet:
    """Pairwise assignments for all ordered graph pairs, kept symmetric.

    Stored as an ``(N, N, n_max)`` integer table of row->col maps, ``-1`` for
    unmatched rows and padding. Updates return new instances.
    """

    def __init__(self, sizes: Sequence[int], table: Optional[np.ndarray] = None):
        self.sizes = tuple(int(s) for s in sizes)
        n = len(self.sizes)
        n_max = max(self.sizes)
        if table is None:
            table = np.full((n, n, n_max), -1, dtype=np.int64)
            for i, s in enumerate(self.sizes):
                table[i, i, :s] = np.arange(s)
        table = np.array(table, dtype=np.int64)
        table.setflags(write=False)
        self.table = table

    @property
    def n_graphs(self) -> int:
        return len(self.sizes)

    def __getitem__(self, ij: tuple[int, int]) -> Assignment:
        i, j = ij
        return Assignment.from_array(self.table[i, j, : self.sizes[i]], self.sizes[j])

    def replace(self, i: int, j: int, x: Assignment) -> "MatchingSet":
        if i == j:
            raise ContractError("diagonal assignments are fixed to the identity")
        if (x.rows, x.cols) != (self.sizes[i], self.sizes[j]) or not validate(x):
            raise ContractError(f"invalid assignment for pair ({i}, {j})")
        table = self.table.copy()
        table[i, j] = -1
        table[j, i] = -1
        for r, c in x.matches.items():
            table[i, j, r] = c
            table[j, i, c] = r
        return MatchingSet(self.sizes, table)

    @classmethod
    def from_pairs(cls, sizes: Sequence[int], pairs: Mapping[tuple[int, int], Assignment]) -> "MatchingSet":
        """Build from assignments for unordered pairs ``(i, j)``, ``i < j``; mirrors are filled in."""
        ms = cls(sizes)
        table = ms.table.copy()
        for (i, j), x in pairs.items():
            if (x.rows, x.cols) != (ms.sizes[i], ms.sizes[j]) or not validate(x):
                raise ContractError(f"invalid assignment for pair ({i}, {j})")
            table[i, j] = -1
            table[j, i] = -1
            for r, c in x.matches.items():
                table[i, j, r] = c
                table[j, i, c] = r
        return cls(sizes, table)

    def is_symmetric(self) -> bool:
        n = self.n_graphs
        for i in range(n):
            for j in range(n):
                if self[j, i].matches != transpose(self[i, j]).matches:
                    return False
        return True

    def __eq__(self, other):
        if not isinstance(other, MatchingSet):
            return NotImplemented
        return self.sizes == other.sizes and np.array_equal(self.table, other.table)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ClusterIndicator:
    """Symmetric boolean pair-selection matrix with a fixed true diagonal."""

    selected: np.ndarray

    def __post_init__(self):
        c = np.array(self.selected, dtype=bool)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ContractError("indicator must be square")
        if not np.array_equal(c, c.T):
            raise ContractError("indicator must be symmetric")
        if not c.diagonal().all():
            raise ContractError("indicator diagonal must be true")
        c.setflags(write=False)
        object.__setattr__(self, "selected", c)

    @classmethod
    def identity(cls, n: int) -> "ClusterIndicator":
        return cls(np.eye(n, dtype=bool))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "ClusterIndicator":
        c = np.eye(n, dtype=bool)
        for i, j in pairs:
            c[i, j] = c[j, i] = True
        return cls(c)

    @property
    def n_graphs(self) -> int:
        return self.selected.shape[0]

    def pairs(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.selected, 1))
        return list(zip(i.tolist(), j.tolist()))

    def n_selected(self) -> int:
        """Number of selected ordered off-diagonal pairs."""
        return int(self.selected.sum()) - self.n_graphs

    def __eq__(self, other):
        if not isinstance(other, ClusterIndicator):
            return NotImplemented
        return np.array_equal(self.selected, other.selected)

    __hash__ = None


@dataclass(frozen=True)
class ClusterDivision:
    labels: tuple[int, ...]
    n_clusters: int

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if set(labels) != set(range(self.n_clusters)):
            raise ContractError(f"labels {labels} do not use exactly clusters 0..{self.n_clusters - 1}")

    @classmethod
    def from_labels(cls, labels: Sequence) -> "ClusterDivision":
        """Relabel arbitrary hashable labels to ``0..k-1`` in order of first appearance."""
        remap: dict = {}
        out = [remap.setdefault(lab, len(remap)) for lab in labels]
        return cls(tuple(out), len(remap))

    @property
    def n_graphs(self) -> int:
        return len(self.labels)

    def sizes(self) -> list[int]:
        return [self.labels.count(k) for k in range(self.n_clusters)]

    def members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_clusters)]
        for i, lab in enumerate(self.labels):
            out[lab].append(i)
        return out


@dataclass(frozen=True, eq=False)
class Supergraph:
    adjacency: ClusterIndicator
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != self.adjacency.selected.shape:
            raise ContractError("weights and adjacency must share N")
        if not np.allclose(w, w.T) or (w < 0).any():
            raise ContractError("weights must be symmetric and nonnegative")


SCHEMES = ("hard", "global", "local", "fuse")


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings. ``r`` is a ratio in (0, 1] or the string ``"auto"``."""

    scheme: str = "fuse"
    r: float | str = "auto"
    max_iters: int = 10
    n_clusters: int = 2
    knn_k: int = 10
    beta: float = 0.9
    sigma_sq: float = 0.03
    alpha: float = 1.0
    seed: int = 0
    floyd_sweeps: int = 2
    monotone_guard: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.r != "auto":
            if isinstance(self.r, str) or not 0 < float(self.r) <= 1:
                raise ConfigError(f"r must be in (0, 1] or 'auto', got {self.r!r}")
        if not 0 <= self.beta <= 1:
            raise ConfigError(f"beta must be in [0, 1], got {self.beta}")
        if self.sigma_sq <= 0:
            raise ConfigError(f"sigma_sq must be positive, got {self.sigma_sq}")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.knn_k < 1:
            raise ConfigError("knn_k must be >= 1")
        if self.n_clusters < 1:
            raise ConfigError("n_clusters must be >= 1")
        if self.floyd_sweeps < 1:
            raise ConfigError("floyd_sweeps must be >= 1")

    @property
    def auto_r(self) -> bool:
        return self.r == "auto"


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    objective: float
    structure_change: int
    n_selected: int
    n_improved: int
    seconds: float


@dataclass
class RunTrace:
    records: list[IterationRecord] = field(default_factory=list)

    @property
    def objectives(self) -> list[float]:
        return [r.objective for r in self.records]

    @property
    def structure_changes(self) -> list[int]:
        return [r.structure_change for r in self.records]

    def is_monotone(self, tol: float = 1e-9) -> bool:
        obj = self.objectives
        return all(b >= a - tol for a, b in zip(obj, obj[1:]))
