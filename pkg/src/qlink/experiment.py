"""Experiment grid: plans, per-run records, persistence and summaries.

Output layout under ``output_dir``::

    plan.json               resolved plan, config hash, package version
    records.csv             one row per (architecture, n_total, repeat)
    timings.csv             wall time per run (not deterministic)
    summary.csv             mean/std stop iteration, convergence efficiency
    analysis.csv            expressibility / gradient-variance rows
    traces/<run-id>.csv     iteration, loss
    traces/<run-id>.json    full trace, config, circuit digest, final params
    landscape/<run-id>.csv  loss matrix (rows alpha, columns beta) + .json
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .analysis import estimate_expressibility, gradient_variance, loss_landscape
from .ansatz import Architecture, build_circuit, depth_for, prepare_input
from .objective import loss_and_gradient
from .trainer import TrainConfig, train

log = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).with_name("presets")

RECORD_FIELDS = [
    "run_id", "architecture", "n_total", "n_data", "depth", "repeat_index", "seed",
    "input_seed", "stop_iteration", "converged", "final_loss", "config_hash", "artifact_version",
]
SUMMARY_FIELDS = [
    "architecture", "n_total", "n_runs", "mean_stop_iteration", "std_stop_iteration",
    "fraction_converged", "mean_efficiency", "config_hash", "artifact_version",
]
ANALYSIS_FIELDS = ["architecture", "n_total", "depth", "metric", "value", "n_samples", "seed"]


class PlanError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class AnalysisConfig:
    expressibility: bool = True
    expressibility_samples: int = 5000
    expressibility_bins: int = 75
    expressibility_reduced: bool = False
    variance: bool = True
    variance_samples: int = 200
    variance_scope: str = "first"
    landscape: bool = True
    landscape_qubits: List[int] = field(default_factory=lambda: [8, 9, 10])
    landscape_points: int = 200
    landscape_range: float = 3.0


@dataclass
class ExperimentPlan:
    architectures: List[str] = field(default_factory=lambda: [a.value for a in Architecture])
    qubit_counts: List[int] = field(default_factory=lambda: [5, 6, 7, 8, 9, 10])
    repeats: int = 5
    train: TrainConfig = field(default_factory=TrainConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output_dir: str = "results"
    base_seed: int = 0
    depth_scale: float = 1.0
    layers_per_block: int = 1
    topology: str = "chain"
    share_inputs: bool = True
    workers: int = 1

    def validate(self) -> None:
        if not self.architectures:
            raise PlanError("architectures", "must not be empty")
        for a in self.architectures:
            try:
                Architecture.parse(a)
            except ValueError as exc:
                raise PlanError("architectures", str(exc)) from None
        if not self.qubit_counts or any(int(n) < 2 for n in self.qubit_counts):
            raise PlanError("qubit_counts", "each entry must be >= 2")
        if any(Architecture.parse(a).has_messenger for a in self.architectures) and min(self.qubit_counts) < 3:
            raise PlanError("qubit_counts", "Q-LINK needs >= 3 total qubits (2 data + messenger)")
        if self.repeats < 1:
            raise PlanError("repeats", "must be >= 1")
        if not self.depth_scale > 0:
            raise PlanError("depth_scale", "must be positive")
        if self.workers < 1:
            raise PlanError("workers", "must be >= 1")
        if self.topology not in ("chain", "ring"):
            raise PlanError("topology", f"unknown topology {self.topology!r}")

    @property
    def archs(self) -> List[Architecture]:
        return [Architecture.parse(a) for a in self.architectures]

    def depth(self, n_total: int) -> int:
        return max(1, int(round(depth_for(n_total) * self.depth_scale)))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        d = self.to_dict()
        for k in ("output_dir", "workers"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        d = dict(d or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise PlanError(sorted(unknown)[0], "unknown plan field")
        try:
            train_cfg = TrainConfig(**(d.pop("train", None) or {}))
        except (TypeError, ValueError) as exc:
            raise PlanError("train", str(exc)) from None
        try:
            analysis = AnalysisConfig(**(d.pop("analysis", None) or {}))
        except TypeError as exc:
            raise PlanError("analysis", str(exc)) from None
        plan = cls(train=train_cfg, analysis=analysis, **d)
        plan.validate()
        plan.architectures = [Architecture.parse(a).value for a in plan.architectures]
        plan.qubit_counts = [int(n) for n in plan.qubit_counts]
        return plan


def load_plan(source: str) -> ExperimentPlan:
    """Load a plan from a YAML/JSON file path or a bundled preset name."""
    path = Path(source)
    if not path.exists():
        preset = PRESET_DIR / f"{source}.yaml"
        if not preset.exists():
            raise FileNotFoundError(f"no plan file or preset named {source!r}")
        path = preset
    with open(path) as fh:
        return ExperimentPlan.from_dict(yaml.safe_load(fh))


def apply_overrides(plan: ExperimentPlan, assignments: Iterable[str]) -> ExperimentPlan:
    """Apply ``dotted.key=value`` overrides (values parsed as YAML)."""
    d = plan.to_dict()
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep:
            raise PlanError(item, "override must look like key=value")
        node = d
        parts = key.strip().split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise PlanError(key, "unknown plan field")
            node = node[p]
        if parts[-1] not in node:
            raise PlanError(key, "unknown plan field")
        node[parts[-1]] = yaml.safe_load(raw)
    return ExperimentPlan.from_dict(d)


# --------------------------------------------------------------------------
# records


def stable_seed(*parts) -> int:
    blob = ":".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little") >> 1


def run_id(arch: Architecture, n_total: int, repeat: int) -> str:
    return f"{arch.value}_n{n_total}_r{repeat}"


@dataclass
class RunRecord:
    architecture: str
    n_total: int
    n_data: int
    depth: int
    repeat_index: int
    seed: int
    input_seed: int
    stop_iteration: int
    converged: bool
    final_loss: float
    wall_time_seconds: float = 0.0
    config_hash: str = ""
    artifact_version: str = __version__

    @property
    def run_id(self) -> str:
        return run_id(Architecture.parse(self.architecture), self.n_total, self.repeat_index)

    def row(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("wall_time_seconds")
        d["run_id"] = self.run_id
        d["converged"] = int(self.converged)
        d["final_loss"] = repr(float(self.final_loss))
        return d

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        return cls(
            architecture=row["architecture"],
            n_total=int(row["n_total"]),
            n_data=int(row["n_data"]),
            depth=int(row["depth"]),
            repeat_index=int(row["repeat_index"]),
            seed=int(row["seed"]),
            input_seed=int(row["input_seed"]),
            stop_iteration=int(row["stop_iteration"]),
            converged=bool(int(row["converged"])),
            final_loss=float(row["final_loss"]),
            config_hash=row.get("config_hash", ""),
            artifact_version=row.get("artifact_version", __version__),
        )


def read_records(path) -> List[RunRecord]:
    with open(path, newline="") as fh:
        return [RunRecord.from_row(r) for r in csv.DictReader(fh)]


def write_csv(path, fields: Sequence[str], rows: Iterable[dict]) -> None:
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    os.replace(tmp, path)


def _append_csv(path, fields, row) -> None:
    new = not Path(path).exists()
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        if new:
            w.writeheader()
        w.writerow(row)


def _fmt(x: float) -> str:
    return repr(float(x))


def summarize(records: Sequence[RunRecord], max_iterations: int, config_hash: str = "") -> List[dict]:
    """Group by (architecture, n_total), plus one pooled ``all`` row per
    architecture.  Efficiency is the mean of per-run efficiencies."""
    if not records:
        raise ValueError("no records to summarize")
    order = {a.value: i for i, a in enumerate(Architecture)}
    groups: Dict[tuple, List[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.architecture, r.n_total), []).append(r)
        groups.setdefault((r.architecture, "all"), []).append(r)

    def key(k):
        arch, n = k
        return (order.get(arch, 99), arch, 1 if n == "all" else 0, n if n != "all" else 0)

    rows = []
    for arch, n in sorted(groups, key=key):
        rs = sorted(groups[(arch, n)], key=lambda r: (r.n_total, r.repeat_index))
        stops = np.array([r.stop_iteration for r in rs], dtype=np.float64)
        eff = [max_iterations / r.stop_iteration for r in rs]
        rows.append({
            "architecture": arch,
            "n_total": n,
            "n_runs": len(rs),
            "mean_stop_iteration": _fmt(stops.mean()),
            "std_stop_iteration": _fmt(stops.std()),
            "fraction_converged": _fmt(np.mean([r.converged for r in rs])),
            "mean_efficiency": _fmt(np.mean(eff)),
            "config_hash": config_hash or rs[0].config_hash,
            "artifact_version": rs[0].artifact_version,
        })
    return rows


# --------------------------------------------------------------------------
# execution


def _train_job(job: dict):
    arch = Architecture.parse(job["architecture"])
    circuit = build_circuit(arch, job["n_total"], job["depth"], job["layers_per_block"], job["topology"])
    state = prepare_input(circuit, job["input_seed"])
    cfg = TrainConfig(**job["train"])
    t0 = time.perf_counter()
    trace = train(circuit, state, cfg)
    return job, circuit, trace, time.perf_counter() - t0


def _check_writable(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc


def estimate_cost(plan: ExperimentPlan) -> List[str]:
    """Time one gradient per (architecture, n_total) and scale to a worst-case run."""
    lines = []
    for arch in plan.archs:
        for n in plan.qubit_counts:
            c = build_circuit(arch, n, plan.depth(n), plan.layers_per_block, plan.topology)
            p = np.zeros(c.param_count)
            s = prepare_input(c, 0)
            loss_and_gradient(c, p, s)
            t0 = time.perf_counter()
            loss_and_gradient(c, p, s)
            dt = time.perf_counter() - t0
            worst = dt * plan.train.max_iterations
            lines.append(
                f"{arch.value:15s} n={n:2d} depth={c.depth:4d} params={c.param_count:5d} "
                f"~{dt * 1e3:.2f} ms/iter, <= {worst:.1f} s/run"
            )
    return lines


def run_plan(plan: ExperimentPlan, echo=print) -> dict:
    plan.validate()
    out = Path(plan.output_dir)
    _check_writable(out)
    (out / "traces").mkdir(exist_ok=True)
    chash = plan.config_hash()
    (out / "plan.json").write_text(
        json.dumps({"plan": plan.to_dict(), "config_hash": chash, "artifact_version": __version__},
                   sort_keys=True, indent=1)
    )
    for line in estimate_cost(plan):
        echo(line)

    records_path = out / "records.csv"
    done: Dict[str, RunRecord] = {}
    if records_path.exists():
        for r in read_records(records_path):
            if r.config_hash == chash and (out / "traces" / f"{r.run_id}.json").exists():
                done[r.run_id] = r

    jobs = []
    for n in plan.qubit_counts:
        for rep in range(plan.repeats):
            for arch in plan.archs:
                rid = run_id(arch, n, rep)
                if rid in done:
                    continue
                input_key = ("input", n, rep) if plan.share_inputs else ("input", arch.value, n, rep)
                jobs.append({
                    "architecture": arch.value,
                    "n_total": n,
                    "depth": plan.depth(n),
                    "repeat_index": rep,
                    "seed": stable_seed(plan.base_seed, arch.value, n, rep),
                    "input_seed": stable_seed(plan.base_seed, *input_key),
                    "layers_per_block": plan.layers_per_block,
                    "topology": plan.topology,
                })
    if done:
        echo(f"resuming: {len(done)} runs already recorded, {len(jobs)} to go")
    for job in jobs:
        job["train"] = dataclasses.asdict(dataclasses.replace(plan.train, seed=job["seed"]))

    # rewrite so that only rows from this config remain before appending
    write_csv(records_path, RECORD_FIELDS, [r.row() for r in done.values()])

    def collect(result):
        job, circuit, trace, wall = result
        rec = RunRecord(
            job["architecture"], job["n_total"], circuit.n_data, circuit.depth, job["repeat_index"],
            job["seed"], job["input_seed"], trace.stop_iteration, trace.converged, trace.final_loss,
            wall, chash,
        )
        stem = out / "traces" / rec.run_id
        trace.write_csv(f"{stem}.csv")
        trace.write_json(
            f"{stem}.json", TrainConfig(**job["train"]), circuit,
            input_seed=job["input_seed"], config_hash=chash, artifact_version=__version__,
        )
        _append_csv(records_path, RECORD_FIELDS, rec.row())
        _append_csv(out / "timings.csv", ["run_id", "wall_time_seconds"],
                    {"run_id": rec.run_id, "wall_time_seconds": f"{wall:.3f}"})
        done[rec.run_id] = rec
        echo(f"{rec.run_id}: stop={rec.stop_iteration} converged={rec.converged} "
             f"loss={rec.final_loss:.3g} ({wall:.1f}s)")

    if plan.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            for result in pool.map(_train_job, jobs):
                collect(result)
    else:
        for job in jobs:
            collect(_train_job(job))

    order = {a.value: i for i, a in enumerate(Architecture)}
    records = sorted(done.values(), key=lambda r: (order[r.architecture], r.n_total, r.repeat_index))
    write_csv(records_path, RECORD_FIELDS, [r.row() for r in records])
    summary = summarize(records, plan.train.max_iterations, chash)
    write_csv(out / "summary.csv", SUMMARY_FIELDS, summary)

    analysis_rows = run_analyses(plan, out, chash, echo)
    return {"records": records, "summary": summary, "analysis": analysis_rows}


def run_analyses(plan: ExperimentPlan, out: Path, chash: str, echo=print) -> List[dict]:
    cfg = plan.analysis
    path = out / "analysis.csv"
    rows: Dict[tuple, dict] = {}
    if path.exists():
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                rows[(r["architecture"], r["n_total"], r["metric"])] = r

    def add(arch, n, depth, metric, value, n_samples, seed):
        rows[(arch.value, str(n), metric)] = {
            "architecture": arch.value, "n_total": n, "depth": depth, "metric": metric,
            "value": _fmt(value), "n_samples": n_samples, "seed": seed,
        }
        echo(f"{arch.value} n={n} {metric} = {value:.3e}")

    for arch in plan.archs:
        for n in plan.qubit_counts:
            depth = plan.depth(n)
            circuit = build_circuit(arch, n, depth, plan.layers_per_block, plan.topology)
            if cfg.expressibility:
                metric = "expressibility_reduced" if cfg.expressibility_reduced else "expressibility"
                if (arch.value, str(n), metric) not in rows:
                    seed = stable_seed(plan.base_seed, "expr", arch.value, n)
                    est = estimate_expressibility(
                        circuit, cfg.expressibility_samples, cfg.expressibility_bins, seed,
                        reduced=cfg.expressibility_reduced,
                    )
                    add(arch, n, depth, metric, est.kl_divergence, cfg.expressibility_samples, seed)
            if cfg.variance and (arch.value, str(n), "gradient_variance") not in rows:
                seed = stable_seed(plan.base_seed, "var", arch.value, n)
                rep = gradient_variance(circuit, cfg.variance_samples, seed, cfg.variance_scope)
                add(arch, n, depth, "gradient_variance", rep.variance, cfg.variance_samples, seed)
            if cfg.landscape and n in cfg.landscape_qubits:
                rid = run_id(arch, n, 0)
                target = out / "landscape" / f"{rid}.csv"
                trace_json = out / "traces" / f"{rid}.json"
                if not target.exists() and trace_json.exists():
                    target.parent.mkdir(exist_ok=True)
                    doc = json.loads(trace_json.read_text())
                    state = prepare_input(circuit, doc["input_seed"])
                    seed = stable_seed(plan.base_seed, "landscape", arch.value, n)
                    grid = loss_landscape(
                        circuit, np.array(doc["final_params"]), state,
                        cfg.landscape_points, cfg.landscape_range, seed,
                    )
                    grid.write(target, target.with_suffix(".json"), run_id=rid,
                               config_hash=chash, artifact_version=__version__)
                    echo(f"{rid}: landscape center loss {grid.center_loss:.3g}")

    order = {a.value: i for i, a in enumerate(Architecture)}
    ordered = sorted(rows.values(), key=lambda r: (r["metric"], order.get(r["architecture"], 99), int(r["n_total"])))
    if ordered:
        write_csv(path, ANALYSIS_FIELDS, ordered)
    return ordered
