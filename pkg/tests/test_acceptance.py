"""Acceptance criteria, one test per criterion.

Each test ends with ``verdict(n, ok, detail)``, which records a PASS/FAIL
line for the terminal summary and asserts. Tolerances below are the
contract values; nothing is loosened to force a pass.
"""
import itertools
import json
import time

import numpy as np
import pytest

from z2vqe.ansatz import build_circuit
from z2vqe.cli import run as cli_run
from z2vqe.config import validate_config
from z2vqe.experiments import ground_state_experiment, string_breaking_scan, variance_scan
from z2vqe.hamiltonian import (ModelParams, gauge_hamiltonian, gauss_operator, gauss_violations,
                               jw_lower, jw_raise, matter_hamiltonian, penalty_hamiltonian,
                               total_hamiltonian)
from z2vqe.lattice import StaticCharges, build_ladder
from z2vqe.optimize import Evaluator, parameter_shift_grad
from z2vqe.oracle import dense_ground, lanczos_ground, sector_ground
from z2vqe.pauli import PauliSum
from z2vqe.state import gauss_fidelity

RECIPES = __import__("pathlib").Path(__file__).resolve().parent.parent / "recipes"


def _cfg(**kw):
    return validate_config(kw)


def _max_coeff_diff(a: PauliSum, b: PauliSum) -> float:
    diff = (a - b).simplify(drop_tol=0.0)
    return max((abs(c) for c, _ in diff), default=0.0)


# 1 -------------------------------------------------------------------------------------
def test_c01_symmetry_suite(verdict):
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    violations = checked = 0
    for P in (1, 2, 3):
        lat = build_ladder(P)
        gauss = {s: gauss_operator(lat, s) for s in lat.sites}
        for _ in range(2):
            mu, J, m, V = rng.uniform(0.1, 5, 4)
            base = gauge_hamiltonian(lat, mu) + matter_hamiltonian(lat, J, m)
            for k in range(len(lat.sites) + 1):
                for charged in itertools.combinations(lat.sites, k):
                    h = base + penalty_hamiltonian(lat, StaticCharges.at(lat, charged), V)
                    violations += len(gauss_violations(h, gauss))
                    checked += 1
    elapsed = time.perf_counter() - t0
    verdict(1, violations == 0 and elapsed < 10,
            f"{checked} Hamiltonians (P=1..3, every charge subset), {violations} violations, "
            f"{elapsed:.1f}s (limit 10s)")


# 2 -------------------------------------------------------------------------------------
def test_c02_fermion_algebra(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for P in (1, 2):
        lat = build_ladder(P)
        n = lat.n_qubits
        low = {s: jw_lower(lat, s) for s in lat.sites}
        up = {s: jw_raise(lat, s) for s in lat.sites}
        for a in lat.sites:
            for b in lat.sites:
                delta = PauliSum.identity(n) if a == b else PauliSum.zero(n)
                worst = max(worst, _max_coeff_diff(low[a] * up[b] + up[b] * low[a], delta))
                worst = max(worst, _max_coeff_diff(low[a] * low[b] + low[b] * low[a],
                                                   PauliSum.zero(n)))
    elapsed = time.perf_counter() - t0
    verdict(2, worst <= 1e-12 and elapsed < 5,
            f"max anticommutator deviation {worst:.1e} (tol 1e-12), {elapsed:.1f}s (limit 5s)")


# 3 -------------------------------------------------------------------------------------
def test_c03_oracle_cross_check(verdict):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for P in (1, 2):
        lat = build_ladder(P)
        for _ in range(10):
            mu, J, m, V = rng.uniform(0.1, 5, 4)
            charged = [s for s in lat.sites if rng.random() < 0.3]
            b = total_hamiltonian(lat, ModelParams(mu, J, m, V), StaticCharges.at(lat, charged))
            sym = [p for p, _ in b.gauss_ops.values()] if P == 2 else None
            d = dense_ground(b.h_total, symmetries=sym, keep_state=False).ground_energy
            l = lanczos_ground(b.h_total, seed=count, keep_state=False).ground_energy
            worst = max(worst, abs(d - l))
            count += 1
    elapsed = time.perf_counter() - t0
    verdict(3, count >= 20 and worst < 1e-9 and elapsed < 120,
            f"{count} Hamiltonians, max |E_dense - E_lanczos| = {worst:.1e} (tol 1e-9), "
            f"{elapsed:.0f}s (limit 120s)")


# 4 and 5 -------------------------------------------------------------------------------
@pytest.fixture(scope="module")
def convergence_reports():
    out = {}
    for P in (1, 2):
        t0 = time.perf_counter()
        cfg = _cfg(experiment="ground-state", P=P, layers=3, ansatz="GI", mu=2.0, J=3.0, m=1.0,
                   n_runs=5, seed=0)
        out[P] = (ground_state_experiment(cfg), time.perf_counter() - t0)
    return out


def test_c04_vqe_convergence(verdict, convergence_reports):
    parts, ok = [], True
    for P, (rep, elapsed) in convergence_reports.items():
        best = min(r.rel_error for r in rep.runs)
        ok &= best < 1e-3 and len(rep.runs) == 5
        if P == 2:
            ok &= elapsed < 20 * 60
        parts.append(f"P={P}: best rel error {best:.2e} in {elapsed:.0f}s")
    verdict(4, ok, "; ".join(parts) + " (tol 1e-3, P=2 limit 20 min)")


def test_c05_gi_gauge_invariance(verdict, convergence_reports):
    worst, n_iter = 0.0, 0
    for rep, _ in convergence_reports.values():
        for r in rep.runs:
            worst = max(worst, float(np.max(np.abs(r.trace.fidelities - 1))))
            n_iter += len(r.trace.records)
    verdict(5, worst <= 1e-9,
            f"max |fidelity - 1| = {worst:.1e} over {n_iter} iterations (tol 1e-9)")


# 6 -------------------------------------------------------------------------------------
def test_c06_zz_converges_into_physical_subspace(verdict):
    cfg = _cfg(experiment="ground-state", P=1, layers=3, ansatz="ZZ", mu=1.0, J=1.0, m=1.0,
               n_runs=5, seed=0, init="random")
    rep = ground_state_experiment(cfg)
    good = [r for r in rep.runs if r.gauss_fidelity > 0.99 and abs(r.rel_error) <= 0.01]
    detail = ", ".join(f"(F={r.gauss_fidelity:.4f}, err={r.rel_error:.2e})" for r in rep.runs)
    verdict(6, len(good) >= 3, f"{len(good)}/5 runs with fidelity > 0.99 and error <= 1%: {detail}")


# 7 -------------------------------------------------------------------------------------
def test_c07_shot_robustness(verdict):
    # P=1 has no site (2,0); (1,1) is the P=1 site at the same link distance 2 from (0,0)
    stats = {}
    for shots in (500, 10000):
        cfg = _cfg(experiment="ground-state", P=1, layers=1, ansatz="GI", mu=2.0, J=5.0, m=1.0,
                   charges=[[0, 0], [1, 1]], optimizer="spsa", shots=shots, max_iter=3000,
                   spsa_c=0.2, n_runs=15, seed=0)
        e = np.array([r.final_energy for r in ground_state_experiment(cfg).runs])
        stats[shots] = (e.mean(), e.std(ddof=1) / np.sqrt(len(e)))
    (m1, s1), (m2, s2) = stats[500], stats[10000]
    combined = float(np.hypot(s1, s2))
    verdict(7, abs(m1 - m2) < 3 * combined,
            f"mean E(500)={m1:.4f}+-{s1:.4f}, mean E(10000)={m2:.4f}+-{s2:.4f}, "
            f"|diff|={abs(m1 - m2):.4f} vs 3 SE = {3 * combined:.4f}")


# 8 -------------------------------------------------------------------------------------
def test_c08_barren_plateau_scaling(verdict):
    t0 = time.perf_counter()
    cfg = _cfg(experiment="variance-scan", P=[1, 2, 3], layers=[1, 2, 3], ansatz=["GI", "ZZ"],
               mu=2.0, J=3.0, m=1.0, samples=100, seed=0)
    table = variance_scan(cfg)
    elapsed = time.perf_counter() - t0
    ratios = {(a, L): table.get(3, L, a).variance / table.get(1, L, a).variance
              for a in ("GI", "ZZ") for L in (1, 2, 3)}
    ok = all(r >= 0.1 for r in ratios.values()) and elapsed < 30 * 60
    detail = ", ".join(f"{a}/L{L}: {r:.2f}" for (a, L), r in ratios.items())
    verdict(8, ok, f"var(P=3)/var(P=1) {detail} (need >= 0.1), {elapsed:.0f}s (limit 30 min)")


# 9 -------------------------------------------------------------------------------------
def test_c09_string_breaking(verdict):
    t0 = time.perf_counter()
    cfg = _cfg(experiment="string-breaking", P=3, mu=3.0, J=5.0, m=1.0,
               oracle_method="lanczos", seed=0)
    table = string_breaking_scan(cfg)
    elapsed = time.perf_counter() - t0
    v = table.averaged()
    rise, flat = v[2] - v[1], v[3] - v[2]
    energy_ok = v[1] < v[2] and flat < 0.5 * rise

    lat = build_ladder(3)
    li = {l: i for i, l in enumerate(table.links)}
    si = {s: i for i, s in enumerate(table.sites)}
    path = [((0, 0), "x"), ((1, 0), "x")]
    string = table.row((2, 0))
    broken = table.row((2, 1))
    flux = all(string.link_x[li[l]] < 0 for l in path)
    no_flux = all(x > 0 for x in broken.link_x)
    charge_sites = {(2, 0): [(0, 0), (2, 0)], (2, 1): [(0, 0), (2, 1)]}
    vac_sign = {s: np.sign(table.vacuum_site_z[si[s]]) for s in lat.sites}
    z_kept = all(np.sign(string.site_z[si[s]]) == vac_sign[s] for s in charge_sites[(2, 0)])
    z_flipped = all(np.sign(broken.site_z[si[s]]) == -vac_sign[s] for s in charge_sites[(2, 1)])
    ok = energy_ok and flux and no_flux and z_kept and z_flipped and elapsed < 30 * 60
    verdict(9, ok,
            f"averaged V: " + ", ".join(f"d={d}: {x:.3f}" for d, x in v.items())
            + f"; V3-V2={flat:.3f} vs 0.5*(V2-V1)={0.5 * rise:.3f}; "
            f"flux on path at (2,0): {flux}; no flux at (2,1): {no_flux}; "
            f"Z kept at (2,0) charges: {z_kept}; Z flipped at (2,1) charges: {z_flipped}; "
            f"{elapsed:.0f}s")


# 10 ------------------------------------------------------------------------------------
def test_c10_local_minimum_escape(verdict):
    lat = build_ladder(3)
    charges = StaticCharges.at(lat, [(0, 0), (2, 0)])
    b = total_hamiltonian(lat, ModelParams(2.0, 5.0, 1.0, 0.0), charges)
    free = lanczos_ground(b.h_physical, keep_state=True)
    free_fid = gauss_fidelity(free.ground_state, b.gauss_ops, charges)
    ref = sector_ground(b.h_physical, b.gauss_ops, charges)
    ref_fid = gauss_fidelity(ref.ground_state, b.gauss_ops, charges)

    cfg = _cfg(experiment="ground-state", P=3, layers=3, ansatz="GI", mu=2.0, J=5.0, m=1.0,
               V=0.0, charges=[[0, 0], [2, 0]], n_runs=20, seed=0)
    rep = ground_state_experiment(cfg, stop_within=0.01)
    best = min(r.rel_error for r in rep.runs)
    ok = free_fid < 1 - 1e-6 and abs(ref_fid - 1) < 1e-9 and best < 0.01
    verdict(10, ok,
            f"unconstrained ground fidelity {free_fid:.4f} (E={free.ground_energy:.4f}), "
            f"sector reference E={ref.ground_energy:.4f} fidelity {ref_fid:.10f}; "
            f"best GI rel error {best:.2e} after {len(rep.runs)} run(s) (need < 1e-2 in <= 20)")


# 11 ------------------------------------------------------------------------------------
def test_c11_gradient_correctness(verdict):
    t0 = time.perf_counter()
    lat = build_ladder(1)
    b = total_hamiltonian(lat, ModelParams(1.3, 0.7, 0.5, 0.4))
    rng = np.random.default_rng(5)
    h = 1e-5
    worst = 0.0
    for kind in ("GI", "ZZ"):
        ev = Evaluator(build_circuit(kind, lat, 2), b.h_total)
        for _ in range(20):
            theta = rng.uniform(0, 2 * np.pi, ev.n_params)
            ps = parameter_shift_grad(ev, theta)
            fd = np.empty_like(ps)
            for j in range(theta.size):
                e = np.zeros_like(theta)
                e[j] = h
                fd[j] = (ev.exact(theta + e) - ev.exact(theta - e)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(ps - fd))))
    elapsed = time.perf_counter() - t0
    verdict(11, worst < 1e-6 and elapsed < 60,
            f"max |PS - FD| = {worst:.1e} over 40 points (tol 1e-6), {elapsed:.1f}s (limit 60s)")


# 12 ------------------------------------------------------------------------------------
def test_c12_determinism(verdict, tmp_path):
    checks = []
    for recipe, extra in (("fig4", []), ("fig3", ["--set", "P=[1,2]", "--set", "samples=10"])):
        kind = json.loads((RECIPES / f"{recipe}.json").read_text())["experiment"]
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / f"{recipe}_{rep}"
            code = cli_run([kind, "--config", str(RECIPES / f"{recipe}.json"), *extra,
                            "--output-dir", str(out)])
            assert code == 0
            outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        checks.append((recipe, outs[0] == outs[1] and len(outs[0]) > 0))
    verdict(12, all(ok for _, ok in checks),
            "; ".join(f"{r}: {'identical' if ok else 'DIFFERENT'} CSVs" for r, ok in checks))
