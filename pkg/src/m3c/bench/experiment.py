"""Repeated solver runs with metric evaluation and mean/std aggregation."""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..core import ClusterDivision, MatchingSet, RunTrace, SolverConfig
from ..indicator import division_to_indicator
from ..metrics import clustering_accuracy, clustering_purity, matching_accuracy, rand_index
from ..pairwise import RrwmParams
from ..solver import m3c_solve
from .io import Dataset, prediction_to_json
from .synth import SynthConfig, synth_generate

METRICS = ("ma", "cp", "ri", "ca")
SCORE_NORMALIZATION = "min(n_i, n_j)"


@dataclass(eq=False)
class ExperimentResult:
    repeat: int
    data_seed: Optional[int]
    solver_seed: int
    ma: Optional[float]
    cp: Optional[float]
    ri: Optional[float]
    ca: Optional[float]
    seconds: float
    trace: RunTrace
    config: dict
    matchings: MatchingSet = field(repr=False)
    division: ClusterDivision = field(repr=False)

    def metrics(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}

    def to_json(self, timing: bool = False, prediction: bool = True) -> dict:
        out = {"repeat": self.repeat, "data_seed": self.data_seed, "solver_seed": self.solver_seed,
               **self.metrics()}
        if timing:
            out["seconds"] = self.seconds
        records = []
        for r in self.trace.records:
            rec = dataclasses.asdict(r)
            if not timing:
                del rec["seconds"]
            records.append(rec)
        out["trace"] = records
        if prediction:
            out["prediction"] = prediction_to_json(self.matchings, self.division)
        return out

    def csv_row(self, timing: bool = False) -> dict:
        row = {"repeat": self.repeat, "data_seed": self.data_seed, "solver_seed": self.solver_seed,
               **{m: "" if v is None else v for m, v in self.metrics().items()},
               "iterations": len(self.trace.records) - 1,
               "final_objective": self.trace.objectives[-1]}
        if timing:
            row["seconds"] = self.seconds
        return row


def evaluate(matchings: MatchingSet, division: ClusterDivision, gt_matchings: Optional[MatchingSet],
             gt_division: Optional[ClusterDivision]) -> dict:
    """All four metrics; entries are ``None`` when the needed ground truth is absent."""
    out = dict.fromkeys(METRICS)
    if gt_division is not None:
        out["cp"] = clustering_purity(division, gt_division)
        out["ri"] = rand_index(division, gt_division)
        out["ca"] = clustering_accuracy(division, gt_division)
        if gt_matchings is not None:
            out["ma"] = matching_accuracy(matchings, gt_matchings, division_to_indicator(gt_division))
    return out


def run_once(data: Dataset, cfg: SolverConfig, repeat: int = 0, data_seed: Optional[int] = None,
             rrwm_params: RrwmParams = RrwmParams()) -> ExperimentResult:
    t0 = time.perf_counter()
    result = m3c_solve(data.graphs, cfg, rrwm_params=rrwm_params)
    seconds = time.perf_counter() - t0
    scores = evaluate(result.matchings, result.division, data.gt_matchings, data.gt_division)
    return ExperimentResult(repeat, data_seed, cfg.seed, **scores, seconds=seconds, trace=result.trace,
                            config=config_echo(cfg), matchings=result.matchings, division=result.division)


def config_echo(cfg: SolverConfig) -> dict:
    return {**dataclasses.asdict(cfg), "score_normalization": SCORE_NORMALIZATION}


def run_experiment(source: Union[SynthConfig, Dataset], cfg: SolverConfig, repeats: int = 1,
                   rrwm_params: RrwmParams = RrwmParams()) -> list[ExperimentResult]:
    """Run ``repeats`` times.

    A :class:`SynthConfig` source is re-sampled with seed ``source.seed + repeat``;
    a fixed :class:`Dataset` is re-solved with solver seed ``cfg.seed + repeat``.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    out = []
    for rep in range(repeats):
        if isinstance(source, SynthConfig):
            seed = source.seed + rep
            graphs, gt_x, gt_div = synth_generate(source.with_seed(seed))
            out.append(run_once(Dataset(graphs, gt_x, gt_div), cfg, rep, seed, rrwm_params))
        else:
            out.append(run_once(source, dataclasses.replace(cfg, seed=cfg.seed + rep), rep, None, rrwm_params))
    return out


def aggregate(results: list[ExperimentResult], timing: bool = False) -> dict:
    """Mean and population std of each available metric across repeats."""
    out = {}
    keys = list(METRICS) + (["seconds"] if timing else [])
    for key in keys:
        vals = [getattr(r, key) for r in results if getattr(r, key) is not None]
        if vals:
            out[key] = {"mean": float(np.mean(vals)), "std": float(np.std(vals)), "n": len(vals)}
        else:
            out[key] = None
    return out


def results_document(results: list[ExperimentResult], source: dict, timing: bool = False) -> dict:
    return {
        "version": 1,
        "source": source,
        "config": results[0].config if results else None,
        "summary": aggregate(results, timing),
        "runs": [r.to_json(timing) for r in results],
    }
