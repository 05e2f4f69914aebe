"""End-to-end experiments: ground-state VQE, static potential, gradient variance, fidelity traces.

Each experiment returns a result object that renders its own CSV, summary
dict and gnuplot blocks; ``emit`` writes them atomically into a directory.
Run ``r`` of a multi-run experiment is seeded from ``seed + r``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ansatz import build_circuit, zz_initial_theta
from .config import ExperimentConfig
from .hamiltonian import HamiltonianBundle, ModelParams, total_hamiltonian
from .io import atomic_write
from .lattice import Site, StaticCharges, build_ladder, link_distance
from .optimize import (Evaluator, GradientConfig, SpsaConfig, VqeTrace, adjoint_grad,
                       gradient_minimize, parameter_shift_component, spsa_minimize)
from .oracle import SpectrumResult, sector_ground
from .pauli import PauliString
from .state import pauli_expectation

REFERENCE_CHARGE: Site = (0, 0)
VARIATIONAL_SLACK = 1e-8


def _map(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x) -> str:
    return repr(float(x))


def model(cfg: ExperimentConfig, P: int, charges=None) -> HamiltonianBundle:
    lattice = build_ladder(P)
    charges = StaticCharges.at(lattice, cfg.charges if charges is None else charges)
    return total_hamiltonian(lattice, ModelParams(cfg.mu, cfg.J, cfg.m, cfg.V), charges)


def oracle_reference(bundle: HamiltonianBundle, method: str = "auto", seed: int = 0,
                     keep_state: bool = False) -> SpectrumResult:
    return sector_ground(bundle.h_physical, bundle.gauss_ops, bundle.charges, method=method,
                         seed=seed, keep_state=keep_state)


def initial_theta(cfg: ExperimentConfig, circuit, rng: np.random.Generator) -> np.ndarray:
    if cfg.init == "pi":
        return zz_initial_theta(circuit)
    if cfg.init == "random":
        return rng.uniform(0, 2 * np.pi, circuit.n_params)
    return rng.normal(0.0, cfg.init_scale, circuit.n_params)


def run_vqe(cfg: ExperimentConfig, bundle: HamiltonianBundle, ansatz: str, layers: int,
            shots: int | None, run_seed: int, theta0: np.ndarray | None = None) -> VqeTrace:
    circuit = build_circuit(ansatz, bundle.lattice, layers, bundle.charges,
                            **({"rz_sublayer": cfg.rz_sublayer} if ansatz == "ZZ" else {}))
    ev = Evaluator(circuit, bundle.h_total, shots=shots, seed=[run_seed, 1],
                   gauss_ops=bundle.gauss_ops, charges=bundle.charges)
    if theta0 is None:
        theta0 = initial_theta(cfg, circuit, np.random.default_rng([run_seed, 0]))
    if cfg.optimizer == "spsa":
        sc = SpsaConfig(a=cfg.spsa_a, c=cfg.spsa_c, max_iter=cfg.effective_max_iter(),
                        seed=[run_seed, 2])
        return spsa_minimize(ev, theta0, sc)
    return gradient_minimize(ev, theta0, GradientConfig(max_iter=cfg.effective_max_iter(),
                                                        grad_tol=cfg.grad_tol))


# --- ground-state VQE ---------------------------------------------------------------

@dataclass
class RunResult:
    P: int
    layers: int
    ansatz: str
    shots: int | None
    run_id: int
    seed: int
    final_energy: float
    oracle_energy: float
    gauss_fidelity: float
    converged: bool
    trace: VqeTrace

    @property
    def rel_error(self) -> float:
        return (self.final_energy - self.oracle_energy) / abs(self.oracle_energy)


@dataclass
class GroundStateReport:
    runs: list[RunResult] = field(default_factory=list)
    oracle: dict = field(default_factory=dict)    # P -> sector energy
    error: str | None = None

    RUN_HEADER = ["P", "layers", "ansatz", "shots", "run_id", "seed", "final_energy",
                  "oracle_energy", "rel_error", "gauss_fidelity", "converged", "iterations"]
    TRACE_HEADER = ["P", "layers", "ansatz", "shots", "run_id", "iteration", "energy",
                    "gauss_fidelity"]

    def cells(self) -> dict:
        out: dict = {}
        for r in self.runs:
            out.setdefault((r.P, r.layers, r.ansatz, r.shots), []).append(r)
        return out

    def best(self, P=None) -> RunResult:
        runs = [r for r in self.runs if P is None or r.P == P]
        return min(runs, key=lambda r: r.final_energy)

    def csv(self) -> str:
        rows = [[r.P, r.layers, r.ansatz, "" if r.shots is None else r.shots, r.run_id, r.seed,
                 _f(r.final_energy), _f(r.oracle_energy), _f(r.rel_error), _f(r.gauss_fidelity),
                 int(r.converged), len(r.trace.records)] for r in self.runs]
        return _csv(self.RUN_HEADER, rows)

    def trace_csv(self) -> str:
        rows = []
        for r in self.runs:
            shots = "" if r.shots is None else r.shots
            for rec in r.trace.records:
                rows.append([r.P, r.layers, r.ansatz, shots, r.run_id, rec.iteration,
                             _f(rec.energy), _f(rec.gauss_fidelity)])
        return _csv(self.TRACE_HEADER, rows)

    def summary(self) -> dict:
        cells = []
        for (P, L, ans, shots), runs in self.cells().items():
            e = np.array([r.final_energy for r in runs])
            rel = np.array([r.rel_error for r in runs])
            cells.append({"P": P, "layers": L, "ansatz": ans, "shots": shots, "n_runs": len(runs),
                          "seeds": [r.seed for r in runs],
                          "mean_energy": float(e.mean()),
                          "std_energy": float(e.std(ddof=1)) if len(e) > 1 else 0.0,
                          "oracle_energy": runs[0].oracle_energy,
                          "mean_rel_error": float(rel.mean()), "best_rel_error": float(rel.min()),
                          "final_gauss_fidelity": [r.gauss_fidelity for r in runs]})
        return {"experiment": "ground-state", "cells": cells, "error": self.error}

    def dat(self) -> str:
        """One gnuplot block per (layers, ansatz, shots): ``P  mean_rel_error``."""
        blocks: dict = {}
        for c in self.summary()["cells"]:
            blocks.setdefault((c["layers"], c["ansatz"], c["shots"]), []).append(
                (c["P"], c["mean_rel_error"]))
        out = []
        for (L, ans, shots), pts in blocks.items():
            lines = [f"# layers={L} ansatz={ans} shots={shots or 'exact'}", "# P mean_rel_error"]
            lines += [f"{p} {_f(v)}" for p, v in sorted(pts)]
            out.append("\n".join(lines))
        return "\n\n\n".join(out) + "\n"

    def files(self) -> dict:
        return {"ground_state.csv": self.csv(), "ground_state_traces.csv": self.trace_csv(),
                "ground_state.dat": self.dat()}


def _gs_job(job):
    cfg, P, L, ans, shots, r, e_ref = job
    bundle = model(cfg, P)
    seed = cfg.seed + r
    trace = run_vqe(cfg, bundle, ans, L, shots, seed)
    if ans == "GI" and trace.final_energy < e_ref - VARIATIONAL_SLACK * max(1.0, abs(e_ref)):
        raise AssertionError(f"GI energy {trace.final_energy} below sector oracle {e_ref}")
    return RunResult(P, L, ans, shots, r, seed, trace.final_energy, e_ref,
                     trace.final_fidelity, trace.converged, trace)


def ground_state_experiment(cfg: ExperimentConfig, stop_within: float | None = None,
                            report: GroundStateReport | None = None) -> GroundStateReport:
    """All (P, layers, ansatz, shots) cells with ``cfg.n_runs`` runs each.

    ``stop_within`` ends a cell at the first run whose relative error is below
    it. On failure the exception carries the partial report as ``.partial``.
    """
    report = report if report is not None else GroundStateReport()
    try:
        for P in cfg.P:
            bundle = model(cfg, P)
            e_ref = oracle_reference(bundle, cfg.oracle_method, cfg.seed).ground_energy
            report.oracle[P] = e_ref
            for L in cfg.layers:
                for ans in cfg.ansatz:
                    for shots in cfg.shots:
                        jobs = [(cfg, P, L, ans, shots, r, e_ref) for r in range(cfg.n_runs)]
                        if stop_within is None and cfg.threads > 1:
                            report.runs.extend(_map(_gs_job, jobs, cfg.threads))
                            continue
                        # sequential: each finished run is kept even if a later one fails
                        for job in jobs:
                            res = _gs_job(job)
                            report.runs.append(res)
                            if stop_within is not None and res.rel_error < stop_within:
                                break
    except Exception as exc:
        report.error = f"{type(exc).__name__}: {exc}"
        exc.partial = report
        raise
    return report


# --- static potential ---------------------------------------------------------------

@dataclass
class PotentialRow:
    charge_site: Site
    d: int
    energy: float
    V: float
    site_z: list[float]
    link_x: list[float]
    vqe_energy: float | None = None


@dataclass
class StaticPotentialTable:
    P: int
    vacuum_energy: float
    rows: list[PotentialRow]
    sites: list[Site]
    links: list
    vacuum_site_z: list[float] = field(default_factory=list)
    vacuum_link_x: list[float] = field(default_factory=list)

    HEADER = ["charge_site", "d", "energy", "V", "vqe_energy", "site_z", "link_x"]

    def averaged(self) -> dict[int, float]:
        by_d: dict[int, list[float]] = {}
        for r in self.rows:
            by_d.setdefault(r.d, []).append(r.V)
        return {d: float(np.mean(v)) for d, v in sorted(by_d.items())}

    def row(self, site: Site) -> PotentialRow:
        for r in self.rows:
            if r.charge_site == tuple(site):
                return r
        raise KeyError(site)

    def csv(self) -> str:
        rows = [[f"{r.charge_site[0]}:{r.charge_site[1]}", r.d, _f(r.energy), _f(r.V),
                 "" if r.vqe_energy is None else _f(r.vqe_energy),
                 ";".join(_f(v) for v in r.site_z), ";".join(_f(v) for v in r.link_x)]
                for r in self.rows]
        return _csv(self.HEADER, rows)

    def summary(self) -> dict:
        return {"experiment": "string-breaking", "P": self.P,
                "reference_charge": list(REFERENCE_CHARGE),
                "vacuum_energy": self.vacuum_energy,
                "vacuum_site_z": self.vacuum_site_z, "vacuum_link_x": self.vacuum_link_x,
                "averaged_V": {str(d): v for d, v in self.averaged().items()},
                "site_order": [list(s) for s in self.sites],
                "link_order": [[list(l[0]), l[1]] for l in self.links]}

    def dat(self) -> str:
        lines = ["# d averaged_V"] + [f"{d} {_f(v)}" for d, v in self.averaged().items()]
        return "\n".join(lines) + "\n"

    def files(self) -> dict:
        return {"string_breaking.csv": self.csv(), "string_breaking.dat": self.dat()}


def _observables(bundle: HamiltonianBundle, state) -> tuple[list[float], list[float]]:
    lat, n = bundle.lattice, bundle.lattice.n_qubits
    z = [pauli_expectation(state, PauliString.from_ops(n, {lat.qubit_of_site[s]: "Z"})).real
         for s in lat.sites]
    x = [pauli_expectation(state, PauliString.from_ops(n, {lat.qubit_of_link[l]: "X"})).real
         for l in lat.links]
    return z, x


def string_breaking_scan(cfg: ExperimentConfig, max_distance: int = 4) -> StaticPotentialTable:
    """V(d) = E(charges at (0,0) and site) - E(vacuum) for every site up to ``max_distance``."""
    P = cfg.P[0]
    lattice = build_ladder(P)
    vacuum_model = model(cfg, P, charges=())
    vacuum = oracle_reference(vacuum_model, cfg.oracle_method, cfg.seed, keep_state=True)
    vac_z, vac_x = _observables(vacuum_model, vacuum.ground_state)
    rows = []
    for site in lattice.fermion_order:
        d = link_distance(lattice, REFERENCE_CHARGE, site)
        if not 1 <= d <= max_distance:
            continue
        bundle = model(cfg, P, charges=(REFERENCE_CHARGE, site))
        res = oracle_reference(bundle, cfg.oracle_method, cfg.seed, keep_state=True)
        z, x = _observables(bundle, res.ground_state)
        vqe_energy = None
        if cfg.vqe:
            traces = [run_vqe(cfg, bundle, cfg.ansatz[0], cfg.layers[0], cfg.shots[0],
                              cfg.seed + r) for r in range(cfg.n_runs)]
            vqe_energy = min(t.final_energy for t in traces)
        rows.append(PotentialRow(site, d, res.ground_energy, res.ground_energy -
                                 vacuum.ground_energy, z, x, vqe_energy))
    rows.sort(key=lambda r: (r.d, r.charge_site))
    return StaticPotentialTable(P, vacuum.ground_energy, rows, list(lattice.sites),
                                list(lattice.links), vac_z, vac_x)


# --- gradient variance ----------------------------------------------------------------

def derivative_samples(evaluator: Evaluator, index: int | None, samples: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Gradient samples at uniform ``theta`` in [0, 2pi).

    With ``index`` a single parameter-shift component per sample; with
    ``None`` the full gradient (adjoint sweep), shape ``(samples, n_params)``.
    """
    out = []
    for _ in range(samples):
        theta = rng.uniform(0, 2 * np.pi, evaluator.n_params)
        if index is None:
            out.append(adjoint_grad(evaluator, theta))
        else:
            out.append(parameter_shift_component(evaluator, theta, index))
    return np.array(out)


@dataclass
class VarianceCell:
    P: int
    layers: int
    ansatz: str
    parameter: int | None
    variance: float
    mean: float
    samples: int


@dataclass
class VarianceTable:
    cells: list[VarianceCell]
    seed: int

    HEADER = ["P", "layers", "ansatz", "parameter", "variance", "mean", "samples"]

    def get(self, P, layers, ansatz) -> VarianceCell:
        for c in self.cells:
            if (c.P, c.layers, c.ansatz) == (P, layers, ansatz):
                return c
        raise KeyError((P, layers, ansatz))

    def csv(self) -> str:
        rows = [[c.P, c.layers, c.ansatz, "all" if c.parameter is None else c.parameter,
                 _f(c.variance), _f(c.mean), c.samples] for c in self.cells]
        return _csv(self.HEADER, rows)

    def summary(self) -> dict:
        return {"experiment": "variance-scan", "seed": self.seed,
                "cells": [c.__dict__ for c in self.cells]}

    def dat(self) -> str:
        blocks: dict = {}
        for c in self.cells:
            blocks.setdefault((c.ansatz, c.layers), []).append((c.P, c.variance))
        out = []
        for (ans, L), pts in blocks.items():
            lines = [f"# ansatz={ans} layers={L}", "# P variance"]
            lines += [f"{p} {_f(v)}" for p, v in sorted(pts)]
            out.append("\n".join(lines))
        return "\n\n\n".join(out) + "\n"

    def files(self) -> dict:
        return {"variance_scan.csv": self.csv(), "variance_scan.dat": self.dat()}


def _variance_job(job):
    cfg, P, L, ans = job
    if not (1 <= P <= 4 and 1 <= L <= 3):
        raise ValueError(f"variance scan needs P in [1,4] and L in [1,3], got P={P}, L={L}")
    bundle = model(cfg, P)
    circuit = build_circuit(ans, bundle.lattice, L, bundle.charges,
                            **({"rz_sublayer": cfg.rz_sublayer} if ans == "ZZ" else {}))
    ev = Evaluator(circuit, bundle.h_total)
    rng = np.random.default_rng([cfg.seed, P, L, ("GI", "ZZ").index(ans)])
    index = None if cfg.all_params else (L - 1) * circuit.params_per_layer
    grads = derivative_samples(ev, index, cfg.samples, rng)
    if index is None:
        var, mean = float(grads.var(axis=0, ddof=1).mean()), float(grads.mean())
    else:
        var, mean = float(grads.var(ddof=1)), float(grads.mean())
    return VarianceCell(P, L, ans, index, var, mean, cfg.samples)


def variance_scan(cfg: ExperimentConfig) -> VarianceTable:
    jobs = [(cfg, P, L, ans) for ans in cfg.ansatz for L in cfg.layers for P in cfg.P]
    return VarianceTable(_map(_variance_job, jobs, cfg.threads), cfg.seed)


# --- fidelity traces --------------------------------------------------------------------

@dataclass
class FidelityTraces:
    traces: dict[str, VqeTrace]
    oracle_energy: float

    HEADER = ["label", "iteration", "energy", "gauss_fidelity"]

    def csv(self) -> str:
        rows = [[label, rec.iteration, _f(rec.energy), _f(rec.gauss_fidelity)]
                for label, t in self.traces.items() for rec in t.records]
        return _csv(self.HEADER, rows)

    def summary(self) -> dict:
        return {"experiment": "fidelity-trace", "oracle_energy": self.oracle_energy,
                "runs": {label: {"iterations": len(t.records), "final_energy": t.final_energy,
                                 "final_gauss_fidelity": t.final_fidelity,
                                 "min_gauss_fidelity": float(t.fidelities.min()),
                                 "converged": t.converged}
                         for label, t in self.traces.items()}}

    def dat(self) -> str:
        out = []
        for label, t in self.traces.items():
            lines = [f"# {label}", "# iteration gauss_fidelity"]
            lines += [f"{r.iteration} {_f(r.gauss_fidelity)}" for r in t.records]
            out.append("\n".join(lines))
        return "\n\n\n".join(out) + "\n"

    def files(self) -> dict:
        return {"fidelity_trace.csv": self.csv(), "fidelity_trace.dat": self.dat()}


def fidelity_trace_experiment(cfg: ExperimentConfig, control: bool = True) -> FidelityTraces:
    """ZZ runs from all-pi and from uniform random angles, plus a GI control."""
    P, L = cfg.P[0], cfg.layers[0]
    bundle = model(cfg, P)
    e_ref = oracle_reference(bundle, cfg.oracle_method, cfg.seed).ground_energy
    zz = build_circuit("ZZ", bundle.lattice, L, rz_sublayer=cfg.rz_sublayer)
    rng = np.random.default_rng([cfg.seed, 0])
    traces = {
        "zz_pi": run_vqe(cfg, bundle, "ZZ", L, None, cfg.seed, zz_initial_theta(zz)),
        "zz_random": run_vqe(cfg, bundle, "ZZ", L, None, cfg.seed,
                             rng.uniform(0, 2 * np.pi, zz.n_params)),
    }
    if control:
        traces["gi_control"] = run_vqe(cfg, bundle, "GI", L, None, cfg.seed)
    return FidelityTraces(traces, e_ref)


# --- exact ------------------------------------------------------------------------------

@dataclass
class ExactReport:
    rows: list[tuple[int, float, float]]   # P, sector energy, vacuum energy

    HEADER = ["P", "sector_energy", "vacuum_energy"]

    def csv(self) -> str:
        return _csv(self.HEADER, [[P, _f(s), _f(v)] for P, s, v in self.rows])

    def summary(self) -> dict:
        return {"experiment": "exact",
                "rows": [{"P": P, "sector_energy": s, "vacuum_energy": v} for P, s, v in self.rows]}

    def files(self) -> dict:
        return {"exact.csv": self.csv()}


def exact_experiment(cfg: ExperimentConfig) -> ExactReport:
    rows = []
    for P in cfg.P:
        sector = oracle_reference(model(cfg, P), cfg.oracle_method, cfg.seed).ground_energy
        vacuum = (sector if not cfg.charges else
                  oracle_reference(model(cfg, P, charges=()), cfg.oracle_method,
                                   cfg.seed).ground_energy)
        rows.append((P, sector, vacuum))
    return ExactReport(rows)


# --- dispatch and output ------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig):
    return {
        "ground-state": ground_state_experiment,
        "string-breaking": string_breaking_scan,
        "variance-scan": variance_scan,
        "fidelity-trace": fidelity_trace_experiment,
        "exact": exact_experiment,
    }[cfg.experiment](cfg)


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def emit(result, cfg: ExperimentConfig, out_dir: str | Path) -> list[Path]:
    """Write the result's files, ``summary.json`` and the effective ``config.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    files = dict(result.files())
    files["summary.json"] = json.dumps(_clean(result.summary()), indent=1, sort_keys=True) + "\n"
    files["config.json"] = cfg.to_json() + "\n"
    for name, text in files.items():
        path = out_dir / name
        atomic_write(path, text)
        written.append(path)
    return written
