"""Trainability diagnostics: expressibility, gradient variance, loss landscapes."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .ansatz import CircuitSpec, check_params, init_params, prepare_input
from .objective import loss, loss_and_gradient
from .sim import _run_program, zero_state

EXPRESSIBILITY_SAMPLES = 5000
EXPRESSIBILITY_BINS = 75
VARIANCE_SAMPLES = 200
LANDSCAPE_POINTS = 200
LANDSCAPE_RANGE = 3.0


# --------------------------------------------------------------------------
# expressibility


def haar_pdf(fidelity, hilbert_dim: int):
    """Density of ``|<a|b>|^2`` for independent Haar states in dimension N."""
    if hilbert_dim < 2:
        raise ValueError("hilbert_dim must be >= 2")
    f = np.asarray(fidelity, dtype=np.float64)
    if np.any((f < 0) | (f > 1)):
        raise ValueError("fidelity must lie in [0, 1]")
    out = (hilbert_dim - 1) * (1.0 - f) ** (hilbert_dim - 2)
    return float(out) if out.ndim == 0 else out


def haar_bin_log_probabilities(n_bins: int, hilbert_dim: int) -> np.ndarray:
    """log of the Haar mass in each of ``n_bins`` equal bins over [0, 1].

    The mass of ``[lo, hi]`` is ``(1-lo)^(N-1) - (1-hi)^(N-1)``; it is
    evaluated in log space because the upper bins underflow for large N.
    """
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    lo, hi = edges[:-1], edges[1:]
    k = hilbert_dim - 1
    with np.errstate(divide="ignore"):
        ratio = np.exp(k * (np.log1p(-hi) - np.log1p(-lo)))
    return k * np.log1p(-lo) + np.log1p(-ratio)


def haar_bin_probabilities(n_bins: int, hilbert_dim: int) -> np.ndarray:
    return np.exp(haar_bin_log_probabilities(n_bins, hilbert_dim))


def fidelity_histogram(fidelities, n_bins: int) -> np.ndarray:
    counts, _ = np.histogram(np.clip(fidelities, 0.0, 1.0), bins=n_bins, range=(0.0, 1.0))
    return counts / counts.sum()


def kl_divergence(p, q) -> float:
    """``sum p ln(p/q)`` over bins with ``p > 0``."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"bin mismatch: {p.shape} vs {q.shape}")
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def _kl_against_log_q(p, log_q) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * (np.log(p[mask]) - log_q[mask])))


@dataclass(frozen=True)
class ExpressibilityEstimate:
    kl_divergence: float
    n_bins: int
    n_samples: int
    hilbert_dim: int
    histogram: np.ndarray = None


def expressibility_from_fidelities(fidelities, n_bins: int, hilbert_dim: int) -> ExpressibilityEstimate:
    p = fidelity_histogram(fidelities, n_bins)
    kl = _kl_against_log_q(p, haar_bin_log_probabilities(n_bins, hilbert_dim))
    # bins partition [0, 1], so KL is >= 0 up to rounding
    return ExpressibilityEstimate(max(kl, 0.0), n_bins, len(fidelities), hilbert_dim, p)


def expressibility_of_sampler(
    sample: Callable[[np.random.Generator], np.ndarray],
    hilbert_dim: int,
    n_samples: int = EXPRESSIBILITY_SAMPLES,
    n_bins: int = EXPRESSIBILITY_BINS,
    seed=None,
) -> ExpressibilityEstimate:
    """Expressibility of any pure-state generator ``sample(rng) -> amplitudes``."""
    rng = np.random.default_rng(seed)
    fids = np.empty(n_samples)
    for k in range(n_samples):
        a = sample(rng)
        b = sample(rng)
        fids[k] = abs(np.vdot(a, b)) ** 2
    return expressibility_from_fidelities(fids, n_bins, hilbert_dim)


def _reduced_fidelity(a: np.ndarray, b: np.ndarray, n_data: int) -> float:
    """Uhlmann fidelity of the data-qubit states after tracing out the
    messenger (the most significant wire).  Both reduced states have rank
    <= 2, so ``F = ||A^dag B||_1^2`` with ``A`` the two messenger branches."""
    dim = 1 << n_data
    A = a.reshape(2, dim).T
    B = b.reshape(2, dim).T
    s = np.linalg.svd(A.conj().T @ B, compute_uv=False)
    return float(np.sum(s) ** 2)


def estimate_expressibility(
    circuit: CircuitSpec,
    n_samples: int = EXPRESSIBILITY_SAMPLES,
    n_bins: int = EXPRESSIBILITY_BINS,
    seed=None,
    reduced: bool = False,
) -> ExpressibilityEstimate:
    """Sample pairs of uniform ``[0, 2 pi)`` parameter vectors, run the circuit
    from |0...0>, and compare the fidelity histogram with the Haar law.

    With ``reduced=True`` the messenger is traced out and fidelities are
    between mixed data-qubit states, against the Haar law of dimension
    ``2**n_data``.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    rng = np.random.default_rng(seed)
    start = zero_state(circuit.n_total).amplitudes
    program = circuit.program

    def sample():
        psi = start.copy()
        _run_program(psi, *program, init_params(circuit, rng))
        return psi

    reduced = reduced and circuit.kind.has_messenger
    fids = np.empty(n_samples)
    for k in range(n_samples):
        a, b = sample(), sample()
        if reduced:
            fids[k] = _reduced_fidelity(a, b, circuit.n_data)
        else:
            fids[k] = abs(np.vdot(a, b)) ** 2
    dim = 1 << (circuit.n_data if reduced else circuit.n_total)
    return expressibility_from_fidelities(fids, n_bins, dim)


# --------------------------------------------------------------------------
# gradient variance


@dataclass(frozen=True)
class VarianceReport:
    n_total: int
    architecture: str
    variance: float
    n_samples: int
    parameter_scope: str
    mean: float = 0.0


def gradient_variance(
    circuit: CircuitSpec,
    n_samples: int = VARIANCE_SAMPLES,
    seed=None,
    scope: str = "first",
    init: str = "uniform",
    init_scale: float = 0.1,
) -> VarianceReport:
    """Sample variance of the cost gradient over random initializations.

    Every sample draws fresh parameters and a fresh Haar input on the data
    qubits.  ``scope="first"`` uses the first rotation of the first layer;
    ``scope="all"`` averages the per-component variances.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    if scope not in ("first", "all"):
        raise ValueError(f"unknown scope {scope!r}")
    arch = circuit.kind.value
    if circuit.param_count == 0:
        return VarianceReport(circuit.n_total, arch, 0.0, n_samples, "empty")
    rng = np.random.default_rng(seed)
    width = 1 if scope == "first" else circuit.param_count
    grads = np.empty((n_samples, width))
    for k in range(n_samples):
        params = init_params(circuit, rng, init, init_scale)
        state = prepare_input(circuit, rng)
        _, g = loss_and_gradient(circuit, params, state)
        grads[k] = g[:width]
    var = float(np.mean(np.var(grads, axis=0, ddof=1)))
    label = "param[0]" if scope == "first" else f"mean over {width} params"
    return VarianceReport(circuit.n_total, arch, var, n_samples, label, float(np.mean(grads)))


# --------------------------------------------------------------------------
# loss landscape


@dataclass
class LandscapeGrid:
    alpha_axis: np.ndarray
    beta_axis: np.ndarray
    losses: np.ndarray  # losses[i, j] at (alpha_axis[i], beta_axis[j])
    center_loss: float
    directions_seed: int
    directions: np.ndarray = None

    def write(self, csv_path, json_path, **meta) -> None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["alpha\\beta"] + [repr(float(b)) for b in self.beta_axis])
            for a, row in zip(self.alpha_axis, self.losses):
                w.writerow([repr(float(a))] + [repr(float(v)) for v in row])
        doc = {
            "alpha_axis": [float(a) for a in self.alpha_axis],
            "beta_axis": [float(b) for b in self.beta_axis],
            "center_loss": self.center_loss,
            "directions_seed": self.directions_seed,
            "min_loss": float(self.losses.min()),
            "max_loss": float(self.losses.max()),
        }
        doc.update(meta)
        Path(json_path).write_text(json.dumps(doc, sort_keys=True, indent=1))


def landscape_axis(grid_points: int, range_limit: float) -> np.ndarray:
    axis = np.linspace(-range_limit, range_limit, grid_points)
    axis[0], axis[-1] = -range_limit, range_limit
    if grid_points % 2:
        axis[grid_points // 2] = 0.0
    return axis


def random_directions(param_count: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((2, param_count))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def loss_landscape(
    circuit: CircuitSpec,
    trained,
    state,
    grid_points: int = LANDSCAPE_POINTS,
    range_limit: float = LANDSCAPE_RANGE,
    seed: int = 0,
) -> LandscapeGrid:
    """Loss on ``trained + alpha d1 + beta d2`` over a square grid, with
    ``d1, d2`` independent Gaussian directions scaled to unit norm."""
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    trained = check_params(circuit, trained)
    d1, d2 = random_directions(circuit.param_count, seed)
    axis = landscape_axis(grid_points, range_limit)
    losses = np.empty((grid_points, grid_points))
    for i, a in enumerate(axis):
        for j, b in enumerate(axis):
            losses[i, j] = loss(circuit, trained + a * d1 + b * d2, state)
    center = loss(circuit, trained, state)
    return LandscapeGrid(axis, axis.copy(), losses, center, seed, np.stack([d1, d2]))
