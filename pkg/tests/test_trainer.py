import json

import numpy as np
import pytest

from qlink.ansatz import build_circuit, build_vanilla, prepare_input
from qlink.objective import loss
from qlink.sim import zero_state
from qlink.trainer import TrainConfig, TrainTrace, convergence_efficiency, sgd_step, train


def test_sgd_step():
    theta = np.array([0.3, -1.0, 2.0])
    np.testing.assert_array_equal(sgd_step(theta, np.zeros(3), 0.1), theta)
    np.testing.assert_allclose(sgd_step([1.0], [2.0], 0.1), [0.8])
    g = np.array([0.5, 1.0, -2.0])
    twice = sgd_step(sgd_step(theta, g, 0.1), g, 0.1)
    np.testing.assert_allclose(twice, theta - 2 * 0.1 * g, atol=1e-15)
    with pytest.raises(ValueError):
        sgd_step([1.0, 2.0], [1.0], 0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainConfig(loss_threshold=-1)


def test_immediate_convergence():
    c = build_vanilla(3, 2)
    trace = train(c, zero_state(3), TrainConfig(), initial_params=np.zeros(c.param_count))
    assert trace.stop_iteration == 1 and trace.converged
    assert list(trace.losses) == [0.0]


def test_deterministic():
    c = build_circuit("qlink_adaptive", 4, 3)
    s = prepare_input(c, 9)
    cfg = TrainConfig(max_iterations=60, seed=4)
    a, b = train(c, s, cfg), train(c, s, cfg)
    assert a.losses.tobytes() == b.losses.tobytes()
    assert a.final_params.tobytes() == b.final_params.tobytes()


# Depth 3 is too shallow to map a Haar input on 4 qubits to |0000>; gradient
# descent stalls in a local minimum.  Frozen regression fixture.
DEPTH3_FINAL_LOSSES = [0.07099622448566045, 0.053650489023542525, 0.12734852989959955,
                       0.0748442659498022, 0.04558747606965741]


def test_shallow_vanilla_regression():
    c = build_vanilla(4, 3)
    finals = [train(c, prepare_input(c, 100 + s), TrainConfig(seed=s)).final_loss for s in range(5)]
    np.testing.assert_allclose(finals, DEPTH3_FINAL_LOSSES, rtol=1e-6)


@pytest.mark.parametrize("init", ["normal", "uniform"])
def test_small_vanilla_converges(init):
    c = build_vanilla(4, 6)
    hits = 0
    for seed in range(5):
        trace = train(c, prepare_input(c, 100 + seed), TrainConfig(seed=seed, init=init))
        hits += trace.converged
        assert trace.losses[-1] < trace.losses[0]
    assert hits >= 4


def test_trace_invariants():
    c = build_circuit("qlink_fixed", 4, 4)
    s = prepare_input(c, 2)
    cfg = TrainConfig(seed=1)
    trace = train(c, s, cfg)
    assert len(trace.losses) == trace.stop_iteration
    assert trace.losses[0] == loss(c, trace.initial_params, s)
    assert trace.converged == (trace.losses[-1] < cfg.loss_threshold)
    assert trace.converged and trace.final_loss < cfg.loss_threshold
    assert trace.final_loss == loss(c, trace.final_params, s)


def test_unconverged_trace_runs_full_budget():
    c = build_vanilla(4, 6)
    cfg = TrainConfig(max_iterations=5, seed=0)
    trace = train(c, prepare_input(c, 0), cfg)
    assert trace.stop_iteration == 5 and not trace.converged
    assert convergence_efficiency(trace, 5) == 1.0


def test_convergence_efficiency():
    t = TrainTrace(np.zeros(150), 150, True, np.zeros(1))
    assert convergence_efficiency(t, 1500) == 10.0
    t = TrainTrace(np.ones(1500), 1500, False, np.zeros(1))
    assert convergence_efficiency(t, 1500) == 1.0


def test_trace_export(tmp_path):
    c = build_circuit("vanilla", 3, 2)
    cfg = TrainConfig(seed=3, max_iterations=20)
    trace = train(c, prepare_input(c, 3), cfg)
    trace.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,loss"
    assert len(lines) == trace.stop_iteration + 1
    assert float(lines[1].split(",")[1]) == trace.losses[0]
    trace.write_json(tmp_path / "t.json", cfg, c, input_seed=3)
    doc = json.loads((tmp_path / "t.json").read_text())
    assert doc["config"]["seed"] == 3
    assert doc["circuit"]["digest"] == c.digest()
    assert doc["losses"] == [float(x) for x in trace.losses]
