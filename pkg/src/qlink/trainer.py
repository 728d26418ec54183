"""Full-batch gradient descent with a loss-threshold stopping rule."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .ansatz import CircuitSpec, check_params, init_params
from .objective import loss_and_gradient
from .sim import StateVector

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_iterations: int = 1500
    loss_threshold: float = 1e-3
    seed: int = 0
    init: str = "normal"
    init_scale: float = 0.1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not self.loss_threshold > 0:
            raise ValueError("loss_threshold must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class TrainTrace:
    losses: np.ndarray
    stop_iteration: int
    converged: bool
    final_params: np.ndarray
    initial_params: np.ndarray = field(repr=False, default=None)

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "loss"])
            for i, v in enumerate(self.losses, start=1):
                w.writerow([i, repr(float(v))])

    def to_dict(self, config: Optional[TrainConfig] = None, circuit: Optional[CircuitSpec] = None) -> dict:
        out = {
            "stop_iteration": self.stop_iteration,
            "converged": self.converged,
            "losses": [float(v) for v in self.losses],
            "final_params": [float(v) for v in self.final_params],
        }
        if config is not None:
            out["config"] = asdict(config)
        if circuit is not None:
            out["circuit"] = {
                "kind": circuit.kind.value,
                "n_data": circuit.n_data,
                "n_total": circuit.n_total,
                "depth": circuit.depth,
                "param_count": circuit.param_count,
                "digest": circuit.digest(),
            }
        return out

    def write_json(self, path, config=None, circuit=None, **extra) -> None:
        doc = self.to_dict(config, circuit)
        doc.update(extra)
        Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1))


def sgd_step(params, grad, lr: float) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != grad.shape:
        raise ValueError(f"shape mismatch: params {params.shape}, grad {grad.shape}")
    return params - lr * grad


def train(
    circuit: CircuitSpec,
    state: StateVector,
    config: TrainConfig = TrainConfig(),
    initial_params=None,
) -> TrainTrace:
    """Run gradient descent until the pre-update loss drops below the
    threshold or the iteration budget runs out."""
    if initial_params is None:
        params = init_params(circuit, config.seed, config.init, config.init_scale)
    else:
        params = check_params(circuit, initial_params).copy()
    start = params.copy()
    losses = np.empty(config.max_iterations)
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        value, grad = loss_and_gradient(circuit, params, state)
        losses[it - 1] = value
        if value < config.loss_threshold:
            converged = True
            break
        if it == config.max_iterations:
            break
        params = sgd_step(params, grad, config.learning_rate)
    log.debug("%s n=%d stopped at %d (loss %.3g)", circuit.kind.value, circuit.n_total, it, losses[it - 1])
    return TrainTrace(losses[:it].copy(), it, converged, params, start)


def convergence_efficiency(trace: TrainTrace, max_iterations: int) -> float:
    """Iteration budget over stopping iteration (1.0 for unconverged runs)."""
    if trace.stop_iteration < 1:
        raise ValueError("stop_iteration must be >= 1")
    return max_iterations / trace.stop_iteration
