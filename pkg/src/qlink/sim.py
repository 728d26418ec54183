"""Dense statevector simulation.

Qubit ``q`` is bit ``q`` of the basis index (qubit 0 is the least
significant bit), so ``|q1 q0> = |01>`` is basis index 1.

Gates use the ``exp(-i theta G / 2)`` convention for every rotation,
with the full angle ``theta`` stored as the parameter.  The numba kernels
below mutate amplitude arrays in place; the public helpers copy first so
that a :class:`StateVector` is never changed after construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

MAX_QUBITS = 24

SeedLike = Union[int, np.random.Generator, None]


class GateKind(enum.IntEnum):
    RX = 0
    RY = 1
    RZ = 2
    RXX = 3
    CZ = 4
    CNOT = 5

    @property
    def parametric(self) -> bool:
        return self in (GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RXX)

    @property
    def n_targets(self) -> int:
        return 1 if self in (GateKind.RX, GateKind.RY, GateKind.RZ) else 2


# --------------------------------------------------------------------------
# kernels


@njit(cache=True, nogil=True)
def _insert_zero(i, q):
    low = i & ((1 << q) - 1)
    return ((i >> q) << (q + 1)) | low


@njit(cache=True, nogil=True)
def _insert_two_zeros(i, qa, qb):
    lo = min(qa, qb)
    hi = max(qa, qb)
    return _insert_zero(_insert_zero(i, lo), hi)


@njit(cache=True, nogil=True)
def _apply_gate_inplace(psi, op, q0, q1, theta):
    dim = psi.shape[0]
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    if op <= 2:
        m = 1 << q0
        for i in range(dim >> 1):
            i0 = _insert_zero(i, q0)
            i1 = i0 | m
            a0 = psi[i0]
            a1 = psi[i1]
            if op == 0:
                psi[i0] = c * a0 - 1j * s * a1
                psi[i1] = c * a1 - 1j * s * a0
            elif op == 1:
                psi[i0] = c * a0 - s * a1
                psi[i1] = s * a0 + c * a1
            else:
                psi[i0] = (c - 1j * s) * a0
                psi[i1] = (c + 1j * s) * a1
        return
    ma = 1 << q0
    mb = 1 << q1
    for i in range(dim >> 2):
        i00 = _insert_two_zeros(i, q0, q1)
        i01 = i00 | ma
        i10 = i00 | mb
        i11 = i00 | ma | mb
        if op == 3:
            a00 = psi[i00]
            a01 = psi[i01]
            a10 = psi[i10]
            a11 = psi[i11]
            psi[i00] = c * a00 - 1j * s * a11
            psi[i11] = c * a11 - 1j * s * a00
            psi[i01] = c * a01 - 1j * s * a10
            psi[i10] = c * a10 - 1j * s * a01
        elif op == 4:
            psi[i11] = -psi[i11]
        else:
            # q0 is the control: swap target amplitudes where control is set
            tmp = psi[i01]
            psi[i01] = psi[i11]
            psi[i11] = tmp


@njit(cache=True, nogil=True)
def _generator_overlap_imag(lam, psi, op, q0, q1):
    """Im <lam| G |psi> for the generator G of a rotation gate."""
    dim = psi.shape[0]
    acc = 0.0 + 0.0j
    if op == 0:
        m = 1 << q0
        for b in range(dim):
            acc += np.conj(lam[b]) * psi[b ^ m]
    elif op == 1:
        m = 1 << q0
        for b in range(dim):
            if b & m:
                acc += np.conj(lam[b]) * (1j * psi[b ^ m])
            else:
                acc += np.conj(lam[b]) * (-1j * psi[b ^ m])
    elif op == 2:
        m = 1 << q0
        for b in range(dim):
            if b & m:
                acc -= np.conj(lam[b]) * psi[b]
            else:
                acc += np.conj(lam[b]) * psi[b]
    else:
        m = (1 << q0) | (1 << q1)
        for b in range(dim):
            acc += np.conj(lam[b]) * psi[b ^ m]
    return acc.imag


@njit(cache=True, nogil=True)
def _run_program(psi, ops, q0s, q1s, slots, angles, params):
    for k in range(ops.shape[0]):
        slot = slots[k]
        theta = params[slot] if slot >= 0 else angles[k]
        _apply_gate_inplace(psi, ops[k], q0s[k], q1s[k], theta)


@njit(cache=True, nogil=True)
def _diag_expectation(psi, diag):
    acc = 0.0
    for b in range(psi.shape[0]):
        acc += diag[b] * (psi[b].real * psi[b].real + psi[b].imag * psi[b].imag)
    return acc


@njit(cache=True, nogil=True)
def _adjoint_sweep(psi, diag, ops, q0s, q1s, slots, angles, params, grad):
    """Reverse sweep for d<psi|D|psi>/d params.  ``psi`` is the forward
    output and is consumed (left holding the input state)."""
    lam = diag * psi
    for k in range(ops.shape[0] - 1, -1, -1):
        op = ops[k]
        slot = slots[k]
        theta = params[slot] if slot >= 0 else angles[k]
        if slot >= 0:
            grad[slot] += _generator_overlap_imag(lam, psi, op, q0s[k], q1s[k])
        _apply_gate_inplace(psi, op, q0s[k], q1s[k], -theta)
        _apply_gate_inplace(lam, op, q0s[k], q1s[k], -theta)


# --------------------------------------------------------------------------
# public API


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_size(self.n_qubits)
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor_zero(self, extra: int = 1) -> "StateVector":
        """Append ``extra`` qubits in |0> as the most significant wires."""
        amps = np.zeros(self.dim << extra, dtype=np.complex128)
        amps[: self.dim] = self.amplitudes
        return StateVector(self.n_qubits + extra, amps)


def _check_size(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


def zero_state(n_qubits: int) -> StateVector:
    _check_size(n_qubits)
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def random_state(n_qubits: int, seed: SeedLike = None) -> StateVector:
    """Haar-random pure state: i.i.d. complex Gaussian amplitudes, normalized."""
    _check_size(n_qubits)
    rng = np.random.default_rng(seed)
    dim = 1 << n_qubits
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    amps /= np.linalg.norm(amps)
    return StateVector(n_qubits, amps)


def _validate_targets(kind: GateKind, targets: Sequence[int], n_qubits: int) -> tuple:
    targets = tuple(int(t) for t in targets)
    if len(targets) != kind.n_targets:
        raise IndexError(f"{kind.name} takes {kind.n_targets} target(s), got {targets}")
    if len(set(targets)) != len(targets):
        raise IndexError(f"duplicate targets {targets}")
    for t in targets:
        if not 0 <= t < n_qubits:
            raise IndexError(f"target {t} out of range for {n_qubits} qubits")
    return targets


def apply_gate(
    state: StateVector,
    kind: Union[GateKind, str],
    angle: Optional[float] = None,
    targets: Sequence[int] = (0,),
) -> StateVector:
    """Return ``U |state>`` for one gate.  For CNOT the targets are
    ``(control, target)``."""
    kind = GateKind[kind] if isinstance(kind, str) else GateKind(kind)
    targets = _validate_targets(kind, targets, state.n_qubits)
    if kind.parametric and angle is None:
        raise ValueError(f"{kind.name} needs an angle")
    if not kind.parametric and angle is not None:
        raise ValueError(f"{kind.name} takes no angle")
    psi = state.amplitudes.copy()
    q1 = targets[1] if len(targets) > 1 else 0
    _apply_gate_inplace(psi, int(kind), targets[0], q1, float(angle or 0.0))
    return StateVector(state.n_qubits, psi)


def expectation_z(state: StateVector, qubit: int) -> float:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    probs = np.abs(state.amplitudes) ** 2
    bits = (np.arange(state.dim) >> qubit) & 1
    return float(np.sum(probs * (1 - 2 * bits)))


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def z_average_diagonal(n_qubits: int, measured: Sequence[int]) -> np.ndarray:
    """Diagonal of ``(1/m) sum_i Z_i`` over the measured qubits."""
    idx = np.arange(1 << n_qubits)
    diag = np.zeros(1 << n_qubits)
    for q in measured:
        diag += 1 - 2 * ((idx >> q) & 1)
    return diag / len(measured)
