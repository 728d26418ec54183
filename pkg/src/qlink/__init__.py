"""Messenger-qubit residual ansatz (Q-LINK) and Vanilla baseline on a
dense statevector simulator, with training and trainability diagnostics."""

__version__ = "0.1.0"

from .ansatz import (
    Architecture,
    CircuitSpec,
    GateInstruction,
    build_circuit,
    build_qlink,
    build_vanilla,
    depth_for,
    init_params,
    prepare_input,
    run_circuit,
)
from .objective import finite_diff_gradient, gradient, loss, loss_and_gradient, parameter_shift_gradient
from .sim import GateKind, StateVector, apply_gate, expectation_z, fidelity, random_state, zero_state
from .trainer import TrainConfig, TrainTrace, convergence_efficiency, sgd_step, train
