"""Command-line entry point: ``qlink <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    EXPRESSIBILITY_BINS,
    EXPRESSIBILITY_SAMPLES,
    LANDSCAPE_POINTS,
    LANDSCAPE_RANGE,
    VARIANCE_SAMPLES,
    estimate_expressibility,
    gradient_variance,
    loss_landscape,
)
from .ansatz import Architecture, build_circuit, prepare_input
from .experiment import (
    ANALYSIS_FIELDS,
    SUMMARY_FIELDS,
    PlanError,
    _append_csv,
    apply_overrides,
    load_plan,
    read_records,
    run_plan,
    summarize,
    write_csv,
)
from .trainer import TrainConfig, train


def _circuit_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--arch", required=True, type=Architecture.parse,
                   help="vanilla, qlink_fixed or qlink_adaptive")
    p.add_argument("--qubits", required=True, type=int, help="total qubits, messenger included")
    p.add_argument("--depth", type=int, default=None, help="layers (default ceil(n^2 ln n))")
    p.add_argument("--layers-per-block", type=int, default=1)
    p.add_argument("--topology", choices=["chain", "ring"], default="chain")


def _build(args):
    return build_circuit(args.arch, args.qubits, args.depth, args.layers_per_block, args.topology)


def _append_result(path, circuit, metric, value, n_samples, seed):
    if path is None:
        return
    _append_csv(path, ANALYSIS_FIELDS, {
        "architecture": circuit.kind.value, "n_total": circuit.n_total, "depth": circuit.depth,
        "metric": metric, "value": repr(float(value)), "n_samples": n_samples, "seed": seed,
    })


def cmd_run(args) -> int:
    plan = load_plan(args.plan)
    overrides = list(args.set or [])
    for flag, key in [("output_dir", "output_dir"), ("base_seed", "base_seed"),
                      ("repeats", "repeats"), ("workers", "workers"),
                      ("max_iterations", "train.max_iterations")]:
        value = getattr(args, flag)
        if value is not None:
            overrides.append(f"{key}={value}")
    if args.qubits:
        overrides.append(f"qubit_counts={json.dumps(args.qubits)}")
    if args.architectures:
        overrides.append(f"architectures={json.dumps(args.architectures)}")
    for name in ("expressibility", "variance", "landscape"):
        if getattr(args, f"no_{name}"):
            overrides.append(f"analysis.{name}=false")
    plan = apply_overrides(plan, overrides)
    result = run_plan(plan)
    print(f"{len(result['records'])} runs; summary in {Path(plan.output_dir) / 'summary.csv'}")
    return 0


def cmd_train(args) -> int:
    circuit = _build(args)
    cfg = TrainConfig(args.lr, args.max_iterations, args.threshold, args.seed, args.init, args.init_scale)
    state = prepare_input(circuit, args.input_seed)
    trace = train(circuit, state, cfg)
    print(f"{circuit.kind.value} n={circuit.n_total} depth={circuit.depth}: "
          f"stop={trace.stop_iteration} converged={trace.converged} loss={trace.final_loss:.4g}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = out / f"{circuit.kind.value}_n{circuit.n_total}_s{args.seed}"
        trace.write_csv(f"{stem}.csv")
        trace.write_json(f"{stem}.json", cfg, circuit, input_seed=args.input_seed,
                         artifact_version=__version__)
        print(f"wrote {stem}.csv / .json")
    return 0


def cmd_expressibility(args) -> int:
    circuit = _build(args)
    est = estimate_expressibility(circuit, args.samples, args.bins, args.seed, reduced=args.reduced)
    print(f"{circuit.kind.value} n={circuit.n_total} depth={circuit.depth}: "
          f"KL = {est.kl_divergence:.4e} (N={est.hilbert_dim}, {est.n_samples} pairs, {est.n_bins} bins)")
    metric = "expressibility_reduced" if args.reduced else "expressibility"
    _append_result(args.results, circuit, metric, est.kl_divergence, args.samples, args.seed)
    return 0


def cmd_variance(args) -> int:
    circuit = _build(args)
    rep = gradient_variance(circuit, args.samples, args.seed, args.scope, args.init)
    print(f"{rep.architecture} n={rep.n_total} depth={circuit.depth}: "
          f"Var = {rep.variance:.4e} ({rep.parameter_scope}, {rep.n_samples} samples)")
    _append_result(args.results, circuit, "gradient_variance", rep.variance, args.samples, args.seed)
    return 0


def cmd_landscape(args) -> int:
    circuit = _build(args)
    if args.trace:
        doc = json.loads(Path(args.trace).read_text())
        params = np.array(doc["final_params"])
        input_seed = doc.get("input_seed", args.input_seed)
    else:
        trace = train(circuit, prepare_input(circuit, args.input_seed), TrainConfig(seed=args.train_seed))
        params = trace.final_params
        input_seed = args.input_seed
    state = prepare_input(circuit, input_seed)
    grid = loss_landscape(circuit, params, state, args.points, args.range, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"{circuit.kind.value}_n{circuit.n_total}_d{args.seed}"
    grid.write(f"{stem}.csv", f"{stem}.json", input_seed=input_seed, artifact_version=__version__)
    print(f"center loss {grid.center_loss:.4g}, range [{grid.losses.min():.3g}, "
          f"{grid.losses.max():.3g}] -> {stem}.csv")
    return 0


def cmd_summarize(args) -> int:
    records = read_records(args.records)
    rows = summarize(records, args.max_iterations)
    out = args.out or str(Path(args.records).with_name("summary.csv"))
    write_csv(out, SUMMARY_FIELDS, rows)
    w = csv.DictWriter(sys.stdout, fieldnames=SUMMARY_FIELDS[:7], extrasaction="ignore",
                       lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlink", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment plan (file or preset name)")
    p.add_argument("plan", nargs="?", default="paper-grid")
    p.add_argument("--output-dir")
    p.add_argument("--base-seed", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--qubits", type=int, nargs="+")
    p.add_argument("--architectures", nargs="+")
    p.add_argument("--no-expressibility", action="store_true")
    p.add_argument("--no-variance", action="store_true")
    p.add_argument("--no-landscape", action="store_true")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any plan field, e.g. train.learning_rate=0.05")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train", help="train a single circuit")
    _circuit_args(p)
    p.add_argument("--seed", type=int, default=0, help="parameter init seed")
    p.add_argument("--input-seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--max-iterations", type=int, default=1500)
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--init", choices=["normal", "uniform"], default="normal")
    p.add_argument("--init-scale", type=float, default=0.1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("expressibility", help="KL divergence to the Haar fidelity law")
    _circuit_args(p)
    p.add_argument("--samples", type=int, default=EXPRESSIBILITY_SAMPLES)
    p.add_argument("--bins", type=int, default=EXPRESSIBILITY_BINS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reduced", action="store_true", help="trace out the messenger qubit")
    p.add_argument("--results", help="append a row to this results CSV")
    p.set_defaults(func=cmd_expressibility)

    p = sub.add_parser("variance", help="gradient variance over random initializations")
    _circuit_args(p)
    p.add_argument("--samples", type=int, default=VARIANCE_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scope", choices=["first", "all"], default="first")
    p.add_argument("--init", choices=["uniform", "normal"], default="uniform")
    p.add_argument("--results")
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("landscape", help="2-D loss slice around trained parameters")
    _circuit_args(p)
    p.add_argument("--trace", help="trace JSON with final_params (otherwise train first)")
    p.add_argument("--input-seed", type=int, default=0)
    p.add_argument("--train-seed", type=int, default=0)
    p.add_argument("--points", type=int, default=LANDSCAPE_POINTS)
    p.add_argument("--range", type=float, default=LANDSCAPE_RANGE)
    p.add_argument("--seed", type=int, default=0, help="direction seed")
    p.add_argument("--out", default="landscape")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("summarize", help="summary table from records.csv")
    p.add_argument("records")
    p.add_argument("--max-iterations", type=int, default=1500)
    p.add_argument("--out")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PlanError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
