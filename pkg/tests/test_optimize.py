import numpy as np
import pytest

from z2vqe.ansatz import build_circuit
from z2vqe.hamiltonian import ModelParams, total_hamiltonian
from z2vqe.lattice import StaticCharges, build_ladder
from z2vqe.optimize import (Evaluator, GradientConfig, SpsaConfig, adjoint_grad,
                            gradient_minimize, parameter_shift_grad, spsa_minimize)
from z2vqe.oracle import sector_ground


def _setup(kind="GI", L=1, params=(1.0, 1.0, 1.0), shots=None, charged=()):
    lat = build_ladder(1)
    charges = StaticCharges.at(lat, charged)
    b = total_hamiltonian(lat, ModelParams(*params), charges)
    circ = build_circuit(kind, lat, L, charges)
    return b, Evaluator(circ, b.h_total, shots=shots, seed=0, gauss_ops=b.gauss_ops,
                        charges=charges)


@pytest.mark.parametrize("kind", ["GI", "ZZ"])
def test_adjoint_equals_parameter_shift(kind):
    _, ev = _setup(kind, 2)
    theta = np.random.default_rng(4).uniform(0, 2 * np.pi, ev.n_params)
    assert np.allclose(adjoint_grad(ev, theta), parameter_shift_grad(ev, theta), atol=1e-12)


def test_gi_three_layers_reaches_ground_state():
    b, ev = _setup("GI", 3)
    ref = sector_ground(b.h_total, b.gauss_ops).ground_energy
    theta0 = np.random.default_rng(0).normal(0, 0.1, ev.n_params)
    trace = gradient_minimize(ev, theta0)
    assert (trace.final_energy - ref) / abs(ref) < 1e-4
    assert np.allclose(trace.fidelities, 1, atol=1e-9)
    assert np.all(np.diff(trace.best_so_far()) <= 0)


def test_gradient_descent_is_deterministic():
    _, ev = _setup("ZZ", 1)
    theta0 = np.random.default_rng(1).uniform(0, 2 * np.pi, ev.n_params)
    a = gradient_minimize(ev, theta0, GradientConfig(max_iter=30))
    b = gradient_minimize(ev, theta0, GradientConfig(max_iter=30))
    assert a.to_csv() == b.to_csv()


def test_spsa_lowers_energy_in_shot_mode():
    _, ev = _setup("GI", 1, params=(2.0, 5.0, 1.0), shots=1000, charged=((0, 0), (1, 1)))
    theta0 = np.random.default_rng(0).uniform(0, 2 * np.pi, ev.n_params)
    trace = spsa_minimize(ev, theta0, SpsaConfig(max_iter=150, seed=3))
    assert trace.final_energy < trace.records[0].energy - 1.0
    assert np.allclose(trace.fidelities, 1, atol=1e-9)
    assert trace.records[1].shots == 1000


def test_exact_mode_evaluator_rejects_bad_input():
    _, ev = _setup()
    with pytest.raises(ValueError):
        ev(np.zeros(3))
    with pytest.raises(ValueError):
        gradient_minimize(_setup(shots=100)[1], np.zeros(ev.n_params))


def test_trace_csv_header():
    _, ev = _setup()
    trace = gradient_minimize(ev, np.zeros(ev.n_params), GradientConfig(max_iter=3))
    assert trace.to_csv().splitlines()[0] == "run_id,iteration,energy,gauss_fidelity,shots"
