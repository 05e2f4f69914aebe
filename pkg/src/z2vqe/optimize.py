"""VQE cost evaluation, gradients and the optimisation loops."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .ansatz import ParamCircuit, bind, prepare
from .pauli import PauliSum
from .state import (PauliOperator, StateVector, braket_unrotate, expectation, gauss_fidelity,
                    sample_expectation)


class OptimizerDiverged(RuntimeError):
    def __init__(self, message: str, trace: VqeTrace):
        super().__init__(message)
        self.trace = trace


class Evaluator:
    """Cost function ``<psi(theta)|H|psi(theta)>`` for a circuit and Hamiltonian.

    ``shots=None`` is exact mode. In shot mode each call draws fresh samples
    from a generator seeded once with ``seed``, so a run is reproducible as a
    whole.
    """

    def __init__(self, circuit: ParamCircuit, hamiltonian: PauliSum, shots: int | None = None,
                 seed: int | None = None, gauss_ops=None, charges=None):
        if hamiltonian.n_qubits != circuit.n_qubits:
            raise ValueError("Hamiltonian and circuit sizes differ")
        if shots is not None and shots < 1:
            raise ValueError("shots must be >= 1")
        self.circuit = circuit
        self.hamiltonian = hamiltonian
        self.operator = PauliOperator(hamiltonian)
        self.shots = shots
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.gauss_ops = gauss_ops
        self.charges = charges
        self.n_evals = 0
        self._cache_key: bytes | None = None
        self._cache_state: StateVector | None = None

    @property
    def n_params(self) -> int:
        return self.circuit.n_params

    def _theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        return theta

    def state(self, theta) -> StateVector:
        theta = self._theta(theta)
        key = theta.tobytes()
        if key != self._cache_key:
            self._cache_state = prepare(self.circuit, theta)
            self._cache_key = key
        return self._cache_state

    def exact(self, theta) -> float:
        return expectation(self.state(theta), self.operator)

    def __call__(self, theta) -> float:
        return cost(self, theta)

    def fidelity(self, theta) -> float:
        if self.gauss_ops is None:
            return float("nan")
        return gauss_fidelity(self.state(theta), self.gauss_ops, self.charges)


def cost(evaluator: Evaluator, theta) -> float:
    evaluator.n_evals += 1
    if evaluator.shots is None:
        return evaluator.exact(theta)
    return sample_expectation(evaluator.state(theta), evaluator.hamiltonian, evaluator.shots,
                              evaluator.rng)


def parameter_shift_grad(evaluator: Evaluator, theta) -> np.ndarray:
    theta = evaluator._theta(theta).copy()
    grad = np.empty_like(theta)
    for j in range(theta.size):
        t0 = theta[j]
        theta[j] = t0 + math.pi / 2
        plus = cost(evaluator, theta)
        theta[j] = t0 - math.pi / 2
        minus = cost(evaluator, theta)
        theta[j] = t0
        grad[j] = (plus - minus) / 2
    return grad


def parameter_shift_component(evaluator: Evaluator, theta, j: int) -> float:
    theta = evaluator._theta(theta).copy()
    t0 = theta[j]
    theta[j] = t0 + math.pi / 2
    plus = cost(evaluator, theta)
    theta[j] = t0 - math.pi / 2
    minus = cost(evaluator, theta)
    return (plus - minus) / 2


def adjoint_grad(evaluator: Evaluator, theta) -> np.ndarray:
    """Exact gradient by reverse sweep: one forward pass plus O(n_params) gate undos.

    For ``U_j = exp(-i t_j/2 P_j)``: ``dC/dt_j = Im <lambda_j| P_j |psi_j>`` with
    ``psi_j`` the state after gate ``j`` and ``lambda_j`` the back-propagated
    ``H psi``.
    """
    theta = evaluator._theta(theta)
    circuit = evaluator.circuit
    psi = evaluator.state(theta).copy()
    lam = StateVector(psi.n_qubits, evaluator.operator.matvec(psi.amplitudes))
    gens = [(g.rotation_generator(circuit.n_qubits), i) for g, i in circuit.param_gates]
    grad = np.zeros(circuit.n_params)
    for gen, i in reversed(gens):
        grad[i] = braket_unrotate(lam, psi, gen, theta[i]).imag
    return grad


# --- tracing -------------------------------------------------------------------------

@dataclass
class IterationRecord:
    iteration: int
    theta: np.ndarray
    energy: float
    gauss_fidelity: float
    shots: int | None
    cost: float | None = None  # value the optimiser saw (sampled in shot mode)


@dataclass
class VqeTrace:
    records: list[IterationRecord] = field(default_factory=list)
    final_theta: np.ndarray | None = None
    final_energy: float = float("nan")
    converged: bool = False
    message: str = ""

    def record(self, evaluator: Evaluator, iteration: int, theta, cost_value=None):
        theta = np.array(theta, dtype=float)
        energy = evaluator.exact(theta)
        if not math.isfinite(energy):
            raise OptimizerDiverged(f"non-finite energy at iteration {iteration}", self)
        self.records.append(IterationRecord(iteration, theta, energy,
                                            evaluator.fidelity(theta), evaluator.shots,
                                            cost_value))

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def fidelities(self) -> np.ndarray:
        return np.array([r.gauss_fidelity for r in self.records])

    @property
    def final_fidelity(self) -> float:
        return self.records[-1].gauss_fidelity if self.records else float("nan")

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.energies)

    def csv_rows(self, run_id: int = 0) -> list[list]:
        return [[run_id, r.iteration, repr(float(r.energy)), repr(float(r.gauss_fidelity)),
                 "" if r.shots is None else r.shots] for r in self.records]

    def to_csv(self, run_id: int = 0) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        w.writerows(self.csv_rows(run_id))
        return buf.getvalue()

    def theta_json(self, run_id: int = 0) -> dict:
        return {"run_id": run_id,
                "iterations": [r.iteration for r in self.records],
                "theta": [r.theta.tolist() for r in self.records],
                "final_theta": None if self.final_theta is None else self.final_theta.tolist(),
                "final_energy": self.final_energy, "converged": self.converged}


TRACE_HEADER = ["run_id", "iteration", "energy", "gauss_fidelity", "shots"]


def _finish(trace: VqeTrace, evaluator: Evaluator, theta, converged: bool, message: str):
    trace.final_theta = np.array(theta, dtype=float)
    trace.final_energy = evaluator.exact(trace.final_theta)
    trace.converged = converged
    trace.message = message
    return trace


# --- SPSA --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpsaConfig:
    a: float | None = None   # None: calibrated so the first step is ~target_step
    c: float = 0.1
    alpha: float = 0.602
    gamma: float = 0.101
    A: float | None = None   # None: 0.1 * max_iter
    max_iter: int = 300
    seed: int = 0
    target_step: float = 0.1
    calibration_samples: int = 5


def spsa_minimize(evaluator: Evaluator, theta0, config: SpsaConfig = SpsaConfig()) -> VqeTrace:
    if config.max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    rng = np.random.default_rng(config.seed)
    theta = evaluator._theta(theta0).copy()
    A = 0.1 * config.max_iter if config.A is None else config.A
    a = config.a
    if a is None:
        mags = []
        for _ in range(config.calibration_samples):
            delta = rng.choice([-1.0, 1.0], size=theta.size)
            diff = cost(evaluator, theta + config.c * delta) - cost(evaluator, theta - config.c * delta)
            mags.append(abs(diff) / (2 * config.c))
        g = float(np.mean(mags)) or 1.0
        a = config.target_step * (A + 1) ** config.alpha / g

    trace = VqeTrace()
    trace.record(evaluator, 0, theta)
    for k in range(config.max_iter):
        ak = a / (k + 1 + A) ** config.alpha
        ck = config.c / (k + 1) ** config.gamma
        delta = rng.choice([-1.0, 1.0], size=theta.size)
        y_plus = cost(evaluator, theta + ck * delta)
        y_minus = cost(evaluator, theta - ck * delta)
        if not (math.isfinite(y_plus) and math.isfinite(y_minus)):
            raise OptimizerDiverged(f"non-finite cost at iteration {k + 1}", trace)
        theta = theta - ak * (y_plus - y_minus) / (2 * ck) * delta
        trace.record(evaluator, k + 1, theta, (y_plus + y_minus) / 2)
    return _finish(trace, evaluator, theta, True, "max_iter reached")


def spsa_gradient_estimate(f, theta, c: float, rng) -> np.ndarray:
    """One simultaneous-perturbation gradient sample."""
    delta = rng.choice([-1.0, 1.0], size=len(theta))
    return (f(theta + c * delta) - f(theta - c * delta)) / (2 * c) * delta


# --- deterministic gradient descent ----------------------------------------------

@dataclass(frozen=True)
class GradientConfig:
    max_iter: int = 500
    grad_tol: float = 1e-6
    step_tol: float = 1e-10
    method: str = "BFGS"
    gradient: str = "adjoint"  # or "parameter-shift"


def gradient_minimize(evaluator: Evaluator, theta0,
                      config: GradientConfig = GradientConfig()) -> VqeTrace:
    """Quasi-Newton descent (scipy BFGS by default) on exact-mode cost."""
    if evaluator.shots is not None:
        raise ValueError("gradient_minimize needs an exact-mode evaluator")
    theta0 = evaluator._theta(theta0).copy()
    grad_fn = adjoint_grad if config.gradient == "adjoint" else parameter_shift_grad
    trace = VqeTrace()
    trace.record(evaluator, 0, theta0)
    best = {"theta": theta0, "energy": trace.records[0].energy}

    def fun(t):
        val = cost(evaluator, t)
        if not math.isfinite(val):
            raise OptimizerDiverged("non-finite cost", trace)
        if val < best["energy"]:
            best["theta"], best["energy"] = np.array(t), val
        return val

    def callback(xk, *args):
        trace.record(evaluator, len(trace.records), xk)

    options = {"maxiter": config.max_iter}
    if config.method.upper() in ("BFGS", "CG"):
        options.update(gtol=config.grad_tol, xrtol=config.step_tol)
    elif config.method.upper() == "L-BFGS-B":
        options.update(gtol=config.grad_tol)
    else:
        options.update(ftol=config.step_tol)
    res = minimize(fun, theta0, jac=lambda t: grad_fn(evaluator, t), method=config.method,
                   callback=callback, options=options)
    # the best point seen may beat the last accepted iterate after a failed line search
    theta = best["theta"] if best["energy"] < evaluator.exact(res.x) else res.x
    if not trace.records or not np.array_equal(trace.records[-1].theta, theta):
        trace.record(evaluator, len(trace.records), theta)
    return _finish(trace, evaluator, theta, bool(res.success), str(res.message))


def multistart(run, seeds) -> list:
    """Independent runs, one per seed; ``run(seed)`` returns a trace."""
    return [run(seed) for seed in seeds]


def write_traces(traces: list[VqeTrace], csv_path, json_path) -> None:
    from .io import atomic_write
    lines = [",".join(TRACE_HEADER)]
    for run_id, t in enumerate(traces):
        for row in t.csv_rows(run_id):
            lines.append(",".join(str(v) for v in row))
    atomic_write(csv_path, "\n".join(lines) + "\n")
    atomic_write(json_path, json.dumps([t.theta_json(i) for i, t in enumerate(traces)]))
