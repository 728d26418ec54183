import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlink.ansatz import (
    Architecture,
    CircuitSpec,
    build_circuit,
    build_qlink,
    build_vanilla,
    depth_for,
    init_params,
    prepare_input,
    run_circuit,
)
from qlink.sim import GateKind, expectation_z, fidelity, random_state, zero_state

from dense_oracle import circuit_unitary


def test_depth_for():
    # ceil(n^2 ln n): 25 ln 5 = 40.24, 100 ln 10 = 230.26, 4 ln 2 = 2.77
    assert depth_for(5) == 41
    assert depth_for(10) == 231
    assert depth_for(2) == 3
    with pytest.raises(ValueError):
        depth_for(1)


def test_vanilla_examples():
    assert build_vanilla(2, 1).param_count == 6
    c = build_vanilla(3, 2)
    assert sum(ins.kind is GateKind.CZ for ins in c.instructions) == 4
    out = run_circuit(build_vanilla(2, 1), np.zeros(6), zero_state(2))
    np.testing.assert_array_equal(out.amplitudes, zero_state(2).amplitudes)


def test_vanilla_layer_order():
    c = build_vanilla(2, 1)
    kinds = [(ins.kind, ins.targets, ins.slot) for ins in c.instructions]
    assert kinds == [
        (GateKind.RZ, (0,), 0), (GateKind.RY, (0,), 1), (GateKind.RX, (0,), 2),
        (GateKind.RZ, (1,), 3), (GateKind.RY, (1,), 4), (GateKind.RX, (1,), 5),
        (GateKind.CZ, (0, 1), None),
    ]


def test_qlink_examples():
    c = build_qlink(4, 41, adaptive=False)
    assert c.n_total == 5 and c.messenger == 4
    assert build_qlink(2, 1, adaptive=True).param_count == 8


def test_qlink_fixed_small_state_fidelity():
    c = build_qlink(2, 1, adaptive=False)
    params = np.zeros(c.param_count)
    out = run_circuit(c, params, zero_state(3))
    oracle = circuit_unitary(c, params) @ zero_state(3).amplitudes
    f_oracle = abs(oracle[0]) ** 2
    assert f_oracle == pytest.approx(math.cos(math.pi / 8) ** 4, abs=1e-12)
    assert fidelity(out, zero_state(3)) == pytest.approx(f_oracle, abs=1e-12)
    assert fidelity(out, zero_state(3)) == pytest.approx(0.7286, abs=1e-4)


def test_qlink_block_structure():
    c = build_qlink(3, 2, adaptive=True)
    kinds = [ins.kind for ins in c.instructions]
    block = [GateKind.RXX] * 3 + [GateKind.RZ, GateKind.RY, GateKind.RX] * 3 + [GateKind.CZ] * 2 + [GateKind.CNOT] * 3
    assert kinds == block * 2
    rxx = [ins for ins in c.instructions if ins.kind is GateKind.RXX]
    assert [ins.targets for ins in rxx[:3]] == [(3, 0), (3, 1), (3, 2)]
    assert [ins.slot for ins in rxx] == list(range(18, 24))
    cnots = [ins.targets for ins in c.instructions if ins.kind is GateKind.CNOT]
    assert cnots[:3] == [(3, 0), (3, 1), (3, 2)]


def test_qlink_fixed_angle():
    c = build_qlink(2, 3, adaptive=False)
    for ins in c.instructions:
        if ins.kind is GateKind.RXX:
            assert ins.slot is None and ins.angle == pytest.approx(math.pi / 4)


@pytest.mark.parametrize("n", range(2, 7))
@pytest.mark.parametrize("depth", range(1, 4))
def test_gate_counts_and_slot_coverage(n, depth):
    v = build_vanilla(n, depth)
    assert len(v.instructions) == depth * (3 * n + (n - 1))
    assert v.param_count == 3 * n * depth
    for adaptive in (False, True):
        q = build_qlink(n, depth, adaptive)
        assert len(q.instructions) == depth * (3 * n + (n - 1)) + 2 * n * depth
        assert q.param_count == (4 if adaptive else 3) * n * depth
        assert q.n_total == n + 1
    for c in (v, build_qlink(n, depth, False), build_qlink(n, depth, True)):
        slots = sorted(ins.slot for ins in c.instructions if ins.slot is not None)
        assert slots == list(range(c.param_count))
        assert all(max(ins.targets) < c.n_total for ins in c.instructions)


@pytest.mark.parametrize("adaptive", [False, True])
def test_messenger_only_in_collection_and_distribution(adaptive):
    c = build_qlink(4, 3, adaptive)
    for ins in c.instructions:
        if ins.kind in (GateKind.RZ, GateKind.RY, GateKind.RX, GateKind.CZ):
            assert c.messenger not in ins.targets
        else:
            assert ins.targets[0] == c.messenger


def test_build_circuit_counts_messenger_in_total():
    assert build_circuit("vanilla", 5).n_data == 5
    assert build_circuit("qlink_fixed", 5).n_data == 4
    assert build_circuit("qlink-adaptive", 5).depth == 41


def test_ring_topology():
    c = build_vanilla(4, 1, topology="ring")
    cz = [ins.targets for ins in c.instructions if ins.kind is GateKind.CZ]
    assert cz == [(0, 1), (1, 2), (2, 3), (3, 0)]


def test_layers_per_block():
    c = build_qlink(3, 5, adaptive=True, layers_per_block=2)
    n_blocks = 3
    assert sum(ins.kind is GateKind.RXX for ins in c.instructions) == 3 * n_blocks
    assert c.param_count == 3 * 3 * 5 + 3 * n_blocks


@given(st.integers(2, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_adaptive_with_zero_collection_matches_vanilla_on_data(n_data, depth, seed):
    rng = np.random.default_rng(seed)
    van = build_vanilla(n_data, depth)
    ql = build_qlink(n_data, depth, adaptive=True)
    rot = rng.uniform(0, 2 * math.pi, van.param_count)
    params = np.concatenate([rot, np.zeros(ql.param_count - van.param_count)])
    data = random_state(n_data, rng)
    out_v = run_circuit(van, rot, data)
    out_q = run_circuit(ql, params, data.tensor_zero(1))
    for i in range(n_data):
        assert expectation_z(out_q, i) == pytest.approx(expectation_z(out_v, i), abs=1e-10)


def test_init_params():
    c = build_vanilla(5, 41)
    p = init_params(c, 3)
    assert len(p) == 615
    np.testing.assert_array_equal(p, init_params(c, 3))
    assert np.all((p >= 0) & (p < 2 * math.pi))
    q = init_params(c, 3, "normal", 0.1)
    assert abs(np.std(q) - 0.1) < 0.02
    with pytest.raises(ValueError):
        init_params(c, 3, "beta")


@pytest.mark.parametrize("arch", list(Architecture))
def test_run_circuit_matches_dense_oracle(arch):
    rng = np.random.default_rng(5)
    c = build_circuit(arch, 3, depth=2)
    for _ in range(5):
        params = rng.uniform(0, 2 * math.pi, c.param_count)
        psi = prepare_input(c, rng)
        out = run_circuit(c, params, psi)
        np.testing.assert_allclose(out.amplitudes, circuit_unitary(c, params) @ psi.amplitudes, atol=1e-12, rtol=0)
        assert abs(out.norm() - 1) <= 1e-10


def test_run_circuit_identity_vanilla():
    c = build_vanilla(4, 3)
    out = run_circuit(c, np.zeros(c.param_count), zero_state(4))
    np.testing.assert_array_equal(out.amplitudes, zero_state(4).amplitudes)


def test_run_circuit_errors():
    c = build_vanilla(3, 1)
    with pytest.raises(ValueError):
        run_circuit(c, np.zeros(8), zero_state(3))
    with pytest.raises(ValueError):
        run_circuit(c, np.zeros(9), zero_state(4))


def test_prepare_input_messenger_in_zero():
    c = build_circuit("qlink_fixed", 4)
    s = prepare_input(c, 1)
    assert s.n_qubits == 4
    assert np.all(s.amplitudes[8:] == 0)
    assert expectation_z(s, 3) == pytest.approx(1.0)


@pytest.mark.parametrize("arch", list(Architecture))
def test_json_round_trip(arch):
    c = build_circuit(arch, 4, depth=2)
    doc = json.loads(c.to_json())
    assert set(doc) >= {"kind", "n_data", "depth", "instructions"}
    back = CircuitSpec.from_dict(doc)
    assert back == c
    assert back.digest() == c.digest()
