"""Command-line entry point: synth, run, bench, eval, trace."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bench.experiment import METRICS, evaluate, results_document, run_experiment
from .bench.io import ParseError, load_dataset, prediction_from_json, save_dataset, write_csv, write_json
from .bench.synth import SynthConfig, synth_generate
from .core import SCHEMES, ConfigError, SolverConfig
from .solver import m3c_solve

EXIT_OK, EXIT_CONFIG, EXIT_PARSE = 0, 2, 3


def _ratio(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a float or 'auto', got {text!r}")


def _counts(text: str):
    parts = [int(p) for p in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--graphs-per-class", type=_counts, default=8,
                   help="one count, or a comma-separated count per class")
    p.add_argument("--inliers", type=int, default=10)
    p.add_argument("--outliers", type=int, default=2)
    p.add_argument("--deform", type=float, default=0.03)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=SCHEMES, default="fuse")
    p.add_argument("--r", type=_ratio, default="auto")
    p.add_argument("--clusters", type=int, default=None,
                   help="defaults to the number of ground-truth classes, else 2")
    p.add_argument("--max-iters", type=int, default=10)
    p.add_argument("--knn", type=int, default=10)
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--sigma-sq", type=float, default=0.03)
    p.add_argument("--seed", type=int, default=0)


def _solver_config(args, n_classes: Optional[int]) -> SolverConfig:
    clusters = args.clusters if args.clusters is not None else (n_classes or 2)
    return SolverConfig(scheme=args.scheme, r=args.r, max_iters=args.max_iters, n_clusters=clusters,
                        knn_k=args.knn, beta=args.beta, sigma_sq=args.sigma_sq, seed=args.seed)


def _synth_config(args, seed: int) -> SynthConfig:
    return SynthConfig(n_classes=args.classes, graphs_per_class=args.graphs_per_class,
                       n_inliers=args.inliers, n_outliers=args.outliers, deform_sigma=args.deform, seed=seed)


def _emit(doc: dict, results, args) -> None:
    if args.out:
        write_json(args.out, doc)
    else:
        json.dump(doc, sys.stdout, indent=1)
        sys.stdout.write("\n")
    if args.csv:
        write_csv(args.csv, [r.csv_row(args.timing) for r in results])
    for key in METRICS:
        s = doc["summary"][key]
        text = "n/a" if s is None else f"{s['mean']:.4f} +- {s['std']:.4f}"
        print(f"{key.upper()}: {text}", file=sys.stderr)


def cmd_synth(args) -> int:
    graphs, _, _ = synth_generate(_synth_config(args, args.seed))
    save_dataset(args.out, graphs)
    return EXIT_OK


def cmd_run(args) -> int:
    data = load_dataset(args.input)
    n_classes = data.gt_division.n_clusters if data.gt_division else None
    cfg = _solver_config(args, n_classes)
    results = run_experiment(data, cfg, args.repeats)
    doc = results_document(results, {"input": str(args.input)}, args.timing)
    _emit(doc, results, args)
    return EXIT_OK


def cmd_bench(args) -> int:
    synth = _synth_config(args, args.data_seed)
    cfg = _solver_config(args, synth.n_classes)
    results = run_experiment(synth, cfg, args.repeats)
    doc = results_document(results, {"synth": dataclasses.asdict(synth)}, args.timing)
    _emit(doc, results, args)
    return EXIT_OK


def cmd_eval(args) -> int:
    data = load_dataset(args.gt)
    try:
        doc = json.loads(Path(args.pred).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.pred}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    preds = [run["prediction"] for run in doc["runs"]] if isinstance(doc, dict) and "runs" in doc else [doc]
    for k, pred in enumerate(preds):
        matchings, division = prediction_from_json(pred)
        if matchings.sizes != tuple(g.n_nodes for g in data.graphs):
            raise ParseError(f"prediction {k} does not fit the ground-truth graphs")
        scores = evaluate(matchings, division, data.gt_matchings, data.gt_division)
        cells = [f"{m.upper()}={'n/a' if v is None else f'{v:.4f}'}" for m, v in scores.items()]
        print(("" if len(preds) == 1 else f"run {k}: ") + " ".join(cells))
    return EXIT_OK


def cmd_trace(args) -> int:
    data = load_dataset(args.input)
    cfg = _solver_config(args, data.gt_division.n_clusters if data.gt_division else None)
    trace = m3c_solve(data.graphs, cfg).trace
    fields = ["iteration", "objective", "structure_change", "n_selected", "n_improved"]
    if args.timing:
        fields.append("seconds")
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for rec in trace.records:
            writer.writerow(dataclasses.asdict(rec))
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="m3c", description="Joint multi-graph matching and clustering.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    _add_synth_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    for name, func, helptext in (("run", cmd_run, "solve a dataset file"),
                                 ("bench", cmd_bench, "solve freshly sampled synthetic instances")):
        p = sub.add_parser(name, help=helptext)
        if name == "run":
            p.add_argument("--input", required=True)
        else:
            _add_synth_flags(p)
            p.add_argument("--data-seed", type=int, default=0)
        _add_solver_flags(p)
        p.add_argument("--repeats", type=int, default=1)
        p.add_argument("--out")
        p.add_argument("--csv")
        p.add_argument("--timing", action="store_true", help="include wall times (output no longer reproducible)")
        p.set_defaults(func=func)

    p = sub.add_parser("eval", help="score saved predictions against a dataset's ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("trace", help="per-iteration objective and structure change as CSV")
    p.add_argument("--input", required=True)
    _add_solver_flags(p)
    p.add_argument("--out")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "repeats", 1) < 1:
            raise ConfigError("--repeats must be >= 1")
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
