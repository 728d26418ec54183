import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlink.sim import (
    GateKind,
    StateVector,
    apply_gate,
    expectation_z,
    fidelity,
    random_state,
    zero_state,
)

from dense_oracle import gate_matrix

PARAMETRIC = [GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RXX]


def basis(n, index):
    amps = np.zeros(1 << n, dtype=complex)
    amps[index] = 1
    return StateVector(n, amps)


def plus_state(n):
    return StateVector(n, np.full(1 << n, 2 ** (-n / 2), dtype=complex))


@st.composite
def gate_cases(draw, max_qubits=3):
    n = draw(st.integers(1, max_qubits))
    kinds = list(GateKind) if n >= 2 else PARAMETRIC[:3]
    kind = draw(st.sampled_from(kinds))
    targets = draw(st.permutations(range(n)))[: kind.n_targets]
    angle = draw(st.floats(-2 * math.pi, 2 * math.pi)) if kind.parametric else None
    seed = draw(st.integers(0, 2**32 - 1))
    return n, kind, tuple(targets), angle, seed


def test_zero_state():
    np.testing.assert_array_equal(zero_state(1).amplitudes, [1, 0])
    np.testing.assert_array_equal(zero_state(2).amplitudes, [1, 0, 0, 0])
    assert zero_state(10).norm() == 1.0


@pytest.mark.parametrize("n", [0, 25, -1])
def test_zero_state_size_guard(n):
    with pytest.raises(ValueError):
        zero_state(n)


def test_random_state_normalized_and_deterministic():
    for s in range(20):
        assert abs(random_state(5, s).norm() - 1) <= 1e-12
    np.testing.assert_array_equal(random_state(5, 7).amplitudes, random_state(5, 7).amplitudes)
    assert not np.array_equal(random_state(5, 7).amplitudes, random_state(5, 8).amplitudes)


def test_random_state_haar_mean_fidelity():
    # Haar pairs in dimension N have E[F] = 1/N
    rng = np.random.default_rng(0)
    fids = [fidelity(random_state(3, rng), random_state(3, rng)) for _ in range(10_000)]
    assert abs(np.mean(fids) - 1 / 8) < 0.01


def test_state_vector_rejects_wrong_length():
    with pytest.raises(ValueError):
        StateVector(2, np.zeros(3))


def test_state_vector_is_read_only():
    s = zero_state(2)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


def test_rz_zero_is_identity():
    psi = random_state(4, 1)
    for q in range(4):
        np.testing.assert_array_equal(apply_gate(psi, GateKind.RZ, 0.0, [q]).amplitudes, psi.amplitudes)


def test_rx_pi_on_zero():
    out = apply_gate(zero_state(1), GateKind.RX, math.pi, [0])
    np.testing.assert_allclose(out.amplitudes, [0, -1j], atol=1e-15)


def test_rxx_half_pi_on_zero_pair():
    out = apply_gate(zero_state(2), GateKind.RXX, math.pi / 2, [0, 1])
    expected = gate_matrix("RXX", (0, 1), math.pi / 2, 2) @ np.array([1, 0, 0, 0])
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)
    np.testing.assert_allclose(out.amplitudes, np.array([1, 0, 0, -1j]) / math.sqrt(2), atol=1e-12)


def test_qubit_zero_is_least_significant_bit():
    out = apply_gate(zero_state(3), GateKind.RX, math.pi, [0])
    assert abs(out.amplitudes[1]) == pytest.approx(1.0)
    out = apply_gate(zero_state(3), GateKind.RX, math.pi, [2])
    assert abs(out.amplitudes[4]) == pytest.approx(1.0)


def test_cnot_control_first():
    # |q1 q0> = |01>: control q0 set, flips q1 -> |11>
    out = apply_gate(basis(2, 1), GateKind.CNOT, None, [0, 1])
    assert abs(out.amplitudes[3]) == 1
    out = apply_gate(basis(2, 1), GateKind.CNOT, None, [1, 0])
    assert abs(out.amplitudes[1]) == 1


@pytest.mark.parametrize(
    "kind, angle, targets, exc",
    [
        (GateKind.RX, 0.1, [3], IndexError),
        (GateKind.RXX, 0.1, [1, 1], IndexError),
        (GateKind.CZ, None, [0], IndexError),
        (GateKind.RY, None, [0], ValueError),
        (GateKind.CNOT, 0.3, [0, 1], ValueError),
    ],
)
def test_apply_gate_errors(kind, angle, targets, exc):
    with pytest.raises(exc):
        apply_gate(zero_state(3), kind, angle, targets)


def test_apply_gate_accepts_names():
    a = apply_gate(zero_state(2), "RY", 0.4, [1])
    b = apply_gate(zero_state(2), GateKind.RY, 0.4, [1])
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)


def test_expectation_z_examples():
    for i in range(4):
        assert expectation_z(zero_state(4), i) == 1.0
    assert expectation_z(basis(1, 1), 0) == -1.0
    assert expectation_z(plus_state(1), 0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(IndexError):
        expectation_z(zero_state(2), 2)


def test_fidelity_examples():
    psi = random_state(3, 4)
    assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-14)
    assert fidelity(basis(1, 0), basis(1, 1)) == 0.0
    assert fidelity(basis(1, 0), plus_state(1)) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        fidelity(zero_state(1), zero_state(2))


def test_norm_preservation_1000_pairs():
    rng = np.random.default_rng(99)
    kinds = list(GateKind)
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        kind = kinds[rng.integers(len(kinds))]
        targets = rng.permutation(n)[: kind.n_targets]
        angle = float(rng.uniform(-10, 10)) if kind.parametric else None
        out = apply_gate(random_state(n, rng), kind, angle, targets)
        assert abs(out.norm() - 1) <= 1e-12


@given(gate_cases())
def test_matches_dense_matrix(case):
    n, kind, targets, angle, seed = case
    psi = random_state(n, seed)
    out = apply_gate(psi, kind, angle, targets)
    expected = gate_matrix(kind.name, targets, angle, n) @ psi.amplitudes
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12, rtol=0)


@given(gate_cases(max_qubits=5))
def test_inverse_recovers_input(case):
    n, kind, targets, angle, seed = case
    psi = random_state(n, seed)
    out = apply_gate(psi, kind, angle, targets)
    back = apply_gate(out, kind, None if angle is None else -angle, targets)
    np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-12, rtol=0)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.data())
def test_expectation_z_is_one_minus_twice_excited_probability(n, seed, data):
    q = data.draw(st.integers(0, n - 1))
    psi = random_state(n, seed)
    probs = np.abs(psi.amplitudes) ** 2
    p1 = sum(p for b, p in enumerate(probs) if (b >> q) & 1)
    z = expectation_z(psi, q)
    assert -1 <= z <= 1
    assert z == pytest.approx(1 - 2 * p1, abs=1e-12)


@pytest.mark.parametrize("kind", list(GateKind))
def test_gate_matrices_unitary(kind):
    n = 3
    targets = [2, 0][: kind.n_targets]
    for angle in ([0.0, 0.7, -2.9, math.pi] if kind.parametric else [None]):
        cols = [apply_gate(basis(n, b), kind, angle, targets).amplitudes for b in range(1 << n)]
        U = np.stack(cols, axis=1)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(1 << n), atol=1e-12)
