"""Parametrized circuits: gauge-invariant HVA ("GI") and multi-Z rotation ("ZZ")."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonian import (gauss_operator, hopping_terms, plaquette_string)
from .lattice import LadderLattice, StaticCharges, link_end
from .pauli import PauliString
from .state import Gate, StateVector, apply, gauss_expectations


@dataclass(frozen=True)
class ParamCircuit:
    n_qubits: int
    prep: tuple[Gate, ...]
    layers: int
    param_gates: tuple[tuple[Gate, int], ...]
    name: str = ""

    def __post_init__(self):
        idx = sorted(i for _, i in self.param_gates)
        if idx != list(range(len(idx))):
            raise ValueError("each parameter index must appear exactly once")

    @property
    def n_params(self) -> int:
        return len(self.param_gates)

    @property
    def params_per_layer(self) -> int:
        return self.n_params // self.layers

    def generators(self) -> list[PauliString]:
        """Rotation generator of each parameter, in parameter order."""
        out = [None] * self.n_params
        for g, i in self.param_gates:
            out[i] = g.rotation_generator(self.n_qubits)
        return out

    def to_json(self) -> str:
        return json.dumps({
            "name": self.name,
            "n_qubits": self.n_qubits,
            "layers": self.layers,
            "n_params": self.n_params,
            "prep": [g.to_dict() for g in self.prep],
            "param_gates": [dict(g.to_dict(), param=i) for g, i in self.param_gates],
        }, indent=1)


def bind(circuit: ParamCircuit, theta: Sequence[float]) -> list[Gate]:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {theta.shape}")
    return list(circuit.prep) + [g.bound(theta[i]) for g, i in circuit.param_gates]


def prepare(circuit: ParamCircuit, theta: Sequence[float]) -> StateVector:
    state = StateVector.zero(circuit.n_qubits)
    for g in bind(circuit, theta):
        apply(state, g)
    return state


def _layered(generators_per_layer: list[Gate], layers: int) -> tuple[tuple[Gate, int], ...]:
    out = []
    for _ in range(layers):
        for g in generators_per_layer:
            out.append((g, len(out)))
    return tuple(out)


def gi_layer_gates(lattice: LadderLattice) -> list[Gate]:
    n = lattice.n_qubits
    gates = [Gate.pauli_rot(plaquette_string(lattice, p)) for p in lattice.plaquettes]
    gates += [Gate("RX", (lattice.qubit_of_link[l],)) for l in lattice.links]
    gates += [Gate("RZ", (lattice.qubit_of_site[s],)) for s in lattice.sites]
    for link in lattice.links:
        for _, p in hopping_terms(lattice, link):
            gates.append(Gate.pauli_rot(p.unsigned()))
    assert all(g.rotation_generator(n).is_hermitian for g in gates)
    return gates


def gi_prep(lattice: LadderLattice, charges: StaticCharges | None = None) -> tuple[Gate, ...]:
    """X on matter qubits and H on links so that every G_l has eigenvalue q_l.

    With links in |+>, G_l reduces to ``sign_l * Z_site``; a site needs an X
    exactly when the resulting eigenvalue on |0> disagrees with ``q_l``.
    """
    charges = charges or StaticCharges()
    flips = []
    for s in lattice.fermion_order:
        _, sign = gauss_operator(lattice, s)
        if sign != charges.q(s):
            flips.append(Gate("X", (lattice.qubit_of_site[s],)))
    hs = [Gate("H", (lattice.qubit_of_link[l],)) for l in lattice.links]
    return tuple(flips + hs)


def gi_circuit(lattice: LadderLattice, layers: int,
               charges: StaticCharges | None = None) -> ParamCircuit:
    if layers < 1:
        raise ValueError("layers must be >= 1")
    charges = charges or StaticCharges()
    for s in charges.charged_sites:
        lattice.check_site(s)
    circuit = ParamCircuit(lattice.n_qubits, gi_prep(lattice, charges), layers,
                           _layered(gi_layer_gates(lattice), layers), "GI")
    # self-check of the sector initialisation
    state = prepare(circuit, np.zeros(circuit.n_params))
    gauss = {s: gauss_operator(lattice, s) for s in lattice.sites}
    for s, g in gauss_expectations(state, gauss).items():
        if abs(g - charges.q(s)) > 1e-12:
            raise AssertionError(f"GI initial state misses the sector at {s}: <G>={g}")
    return circuit


def zz_layer_gates(lattice: LadderLattice, rz_sublayer: bool = False) -> list[Gate]:
    n = lattice.n_qubits
    gates = [Gate("RX", (q,)) for q in range(n)]
    if rz_sublayer:
        gates += [Gate("RZ", (q,)) for q in range(n)]
    for link in lattice.links:
        a, b = link[0], link_end(link)
        ops = [(lattice.qubit_of_site[a], "Z"), (lattice.qubit_of_link[link], "Z"),
               (lattice.qubit_of_site[b], "Z")]
        gates.append(Gate.pauli_rot(PauliString.from_ops(n, ops)))
    gates += [Gate.pauli_rot(plaquette_string(lattice, p)) for p in lattice.plaquettes]
    return gates


def zz_circuit(lattice: LadderLattice, layers: int, rz_sublayer: bool = False) -> ParamCircuit:
    if layers < 1:
        raise ValueError("layers must be >= 1")
    prep = tuple(Gate("H", (lattice.qubit_of_link[l],)) for l in lattice.links)
    circuit = ParamCircuit(lattice.n_qubits, prep, layers,
                           _layered(zz_layer_gates(lattice, rz_sublayer), layers), "ZZ")
    # all-pi angles must land on a joint Gauss eigenstate (not necessarily the vacuum)
    gauss = {s: gauss_operator(lattice, s) for s in lattice.sites}
    state = prepare(circuit, zz_initial_theta(circuit))
    for s, g in gauss_expectations(state, gauss).items():
        if abs(abs(g) - 1) > 1e-10:
            raise AssertionError(f"ZZ all-pi state is not a Gauss eigenstate at {s}: <G>={g}")
    return circuit


def sector_of(state: StateVector, gauss_ops, tol: float = 1e-10) -> dict | None:
    """Charge pattern ``{site: q}`` if ``state`` is a joint Gauss eigenstate, else None."""
    out = {}
    for s, g in gauss_expectations(state, gauss_ops).items():
        if abs(abs(g) - 1) > tol:
            return None
        out[s] = 1 if g > 0 else -1
    return out


def zz_initial_theta(circuit: ParamCircuit) -> np.ndarray:
    """All angles pi: every rotation becomes a Pauli, so the state stays in one sector."""
    return np.full(circuit.n_params, np.pi)


def build_circuit(kind: str, lattice: LadderLattice, layers: int,
                  charges: StaticCharges | None = None, **options) -> ParamCircuit:
    kind = kind.upper()
    if kind == "GI":
        return gi_circuit(lattice, layers, charges)
    if kind == "ZZ":
        return zz_circuit(lattice, layers, **options)
    raise ValueError(f"unknown ansatz {kind!r}")
