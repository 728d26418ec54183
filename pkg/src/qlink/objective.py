"""Ground-state-preparation cost and its gradients.

The cost is ``1 - mean_i <Z_i>`` over the data qubits only; a Q-LINK
messenger wire is never measured.  :func:`gradient` is the reverse-mode
adjoint sweep used for training.  :func:`finite_diff_gradient` and
:func:`parameter_shift_gradient` are slow independent checks.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Tuple

import numpy as np

from .ansatz import CircuitSpec, check_input, check_params
from .sim import StateVector, _adjoint_sweep, _diag_expectation, _run_program, z_average_diagonal

FD_STEP = 1e-5


@lru_cache(maxsize=64)
def _cost_diag(n_total: int, measured: Tuple[int, ...]) -> np.ndarray:
    diag = -z_average_diagonal(n_total, measured)
    diag.setflags(write=False)
    return diag


def cost_diagonal(circuit: CircuitSpec) -> np.ndarray:
    """Diagonal of the traceless part of the cost observable, ``-mean_i Z_i``."""
    return _cost_diag(circuit.n_total, circuit.measured_qubits)


def loss_of_state(circuit: CircuitSpec, state: StateVector) -> float:
    return 1.0 + float(_diag_expectation(state.amplitudes, cost_diagonal(circuit)))


def loss(circuit: CircuitSpec, params, state: StateVector) -> float:
    params = check_params(circuit, params)
    check_input(circuit, state)
    psi = state.amplitudes.copy()
    _run_program(psi, *circuit.program, params)
    return 1.0 + float(_diag_expectation(psi, cost_diagonal(circuit)))


def loss_and_gradient(circuit: CircuitSpec, params, state: StateVector) -> Tuple[float, np.ndarray]:
    """One forward pass plus one adjoint sweep."""
    params = check_params(circuit, params)
    check_input(circuit, state)
    diag = cost_diagonal(circuit)
    psi = state.amplitudes.copy()
    _run_program(psi, *circuit.program, params)
    value = 1.0 + float(_diag_expectation(psi, diag))
    grad = np.zeros(circuit.param_count)
    _adjoint_sweep(psi, diag, *circuit.program, params, grad)
    return value, grad


def gradient(circuit: CircuitSpec, params, state: StateVector) -> np.ndarray:
    return loss_and_gradient(circuit, params, state)[1]


def finite_diff_gradient(circuit: CircuitSpec, params, state: StateVector, step: float = FD_STEP) -> np.ndarray:
    if step <= 0:
        raise ValueError("step must be positive")
    params = check_params(circuit, params)
    grad = np.empty(circuit.param_count)
    shifted = params.copy()
    for j in range(circuit.param_count):
        shifted[j] = params[j] + step
        up = loss(circuit, shifted, state)
        shifted[j] = params[j] - step
        down = loss(circuit, shifted, state)
        shifted[j] = params[j]
        grad[j] = (up - down) / (2 * step)
    return grad


def parameter_shift_gradient(circuit: CircuitSpec, params, state: StateVector) -> np.ndarray:
    """Two-term shift rule; exact because every generator squares to I."""
    params = check_params(circuit, params)
    grad = np.empty(circuit.param_count)
    shifted = params.copy()
    for j in range(circuit.param_count):
        shifted[j] = params[j] + math.pi / 2
        up = loss(circuit, shifted, state)
        shifted[j] = params[j] - math.pi / 2
        down = loss(circuit, shifted, state)
        shifted[j] = params[j]
        grad[j] = (up - down) / 2
    return grad
