"""Qubit Hamiltonian of the Z2 gauge theory with staggered fermions.

Conventions: occupation ``n = (1 - Z)/2`` (|0> is empty), lowering
operator ``sigma- = (X + iY)/2`` and the Jordan-Wigner string
``phi_l = prod_{k<l} (i Z_k) sigma-_l`` over matter qubits in fermion
order. Link qubits never appear in strings.
"""
from __future__ import annotations

from dataclasses import dataclass

from .lattice import (LadderLattice, Link, Site, StaticCharges, link_end, links_of_site,
                      staggered_sign)
from .pauli import PauliString, PauliSum, commutes, total


@dataclass(frozen=True)
class ModelParams:
    mu: float
    J: float
    m: float
    V: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.J < 0:
            raise ValueError(f"J must be >= 0, got {self.J}")
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if self.V < 0:
            raise ValueError(f"V must be >= 0, got {self.V}")


@dataclass(frozen=True)
class HamiltonianBundle:
    lattice: LadderLattice
    params: ModelParams
    charges: StaticCharges
    h_gauge: PauliSum
    h_matter: PauliSum
    h_penalty: PauliSum
    h_total: PauliSum
    gauss_ops: dict[Site, tuple[PauliString, int]]

    def gauss_strings(self) -> dict[Site, PauliString]:
        """Gauss operators with their staggered sign folded into the phase."""
        return {s: (p if sign > 0 else -p) for s, (p, sign) in self.gauss_ops.items()}

    @property
    def h_physical(self) -> PauliSum:
        return (self.h_gauge + self.h_matter).simplify()


def _single(lattice: LadderLattice, ops) -> PauliString:
    return PauliString.from_ops(lattice.n_qubits, ops)


def plaquette_string(lattice: LadderLattice, plaquette) -> PauliString:
    return _single(lattice, [(lattice.qubit_of_link[l], "Z") for l in plaquette])


def gauge_hamiltonian(lattice: LadderLattice, mu: float) -> PauliSum:
    n = lattice.n_qubits
    terms = [(-mu, _single(lattice, [(lattice.qubit_of_link[l], "X")])) for l in lattice.links]
    terms += [(-1.0, plaquette_string(lattice, p)) for p in lattice.plaquettes]
    return PauliSum(n, tuple(terms)).simplify()


def jw_lower(lattice: LadderLattice, site: Site) -> PauliSum:
    """Annihilation operator at ``site`` as a Pauli sum."""
    k = lattice.fermion_index(site)
    n = lattice.n_qubits
    string = [(lattice.qubit_of_site[s], "Z") for s in lattice.fermion_order[:k]]
    q = lattice.qubit_of_site[lattice.fermion_order[k]]
    # (iZ)^k carries phase i^k
    x_part = PauliString.from_ops(n, string + [(q, "X")], phase=k)
    y_part = PauliString.from_ops(n, string + [(q, "Y")], phase=k + 1)
    return PauliSum(n, ((0.5, x_part), (0.5, y_part)))


def jw_raise(lattice: LadderLattice, site: Site) -> PauliSum:
    return jw_lower(lattice, site).adjoint()


def number_operator(lattice: LadderLattice, site: Site) -> PauliSum:
    q = lattice.qubit_of_site[lattice.check_site(site)]
    n = lattice.n_qubits
    return PauliSum(n, ((0.5, PauliString(n)), (-0.5, _single(lattice, [(q, "Z")]))))


def hopping_terms(lattice: LadderLattice, link: Link) -> PauliSum:
    """``phi_a^dag Z_link phi_b + h.c.`` for the link ``a -> b`` (unit coupling)."""
    a, b = link[0], link_end(link)
    z_link = PauliSum.from_string(_single(lattice, [(lattice.qubit_of_link[link], "Z")]))
    hop = jw_raise(lattice, a) * z_link * jw_lower(lattice, b)
    return (hop + hop.adjoint()).simplify()


def matter_hamiltonian(lattice: LadderLattice, J: float, m: float) -> PauliSum:
    n = lattice.n_qubits
    parts = []
    if J != 0:
        parts += [hopping_terms(lattice, l).scale(J) for l in lattice.links]
    if m != 0:
        parts += [number_operator(lattice, s).scale(m * staggered_sign(s)) for s in lattice.sites]
    return total(parts, n).simplify()


def gauss_operator(lattice: LadderLattice, site: Site) -> tuple[PauliString, int]:
    """``G = sign * Z_site * prod X_link`` over the links touching ``site``."""
    site = lattice.check_site(site)
    ops = [(lattice.qubit_of_site[site], "Z")]
    ops += [(lattice.qubit_of_link[l], "X") for l in links_of_site(lattice, site)]
    return _single(lattice, ops), staggered_sign(site)


def penalty_hamiltonian(lattice: LadderLattice, charges: StaticCharges, V: float) -> PauliSum:
    """``V * sum_l (G_l - q_l)^2 = 2V * sum_l (1 - q_l G_l)``."""
    if V < 0:
        raise ValueError("V must be >= 0")
    n = lattice.n_qubits
    if V == 0:
        return PauliSum.zero(n)
    terms = []
    for s in lattice.sites:
        p, sign = gauss_operator(lattice, s)
        terms.append((2 * V, PauliString(n)))
        terms.append((-2 * V * charges.q(s) * sign, p))
    return PauliSum(n, tuple(terms)).simplify()


def sector_projector_penalty(lattice: LadderLattice, charges: StaticCharges,
                             strength: float) -> PauliSum:
    """``strength * sum_l (1 - q_l G_l)``: zero on the sector, >= 2*strength off it."""
    return penalty_hamiltonian(lattice, charges, strength / 2)


def gauss_violations(h: PauliSum, gauss_ops: dict[Site, tuple[PauliString, int]]) -> list:
    """Pairs (term, site) that fail to commute."""
    return [(p, s) for _, p in h for s, (g, _) in gauss_ops.items() if not commutes(p, g)]


def total_hamiltonian(lattice: LadderLattice, params: ModelParams,
                      charges: StaticCharges | None = None) -> HamiltonianBundle:
    charges = charges or StaticCharges()
    for s in charges.charged_sites:
        lattice.check_site(s)
    h_gauge = gauge_hamiltonian(lattice, params.mu)
    h_matter = matter_hamiltonian(lattice, params.J, params.m)
    h_penalty = penalty_hamiltonian(lattice, charges, params.V)
    h_total = (h_gauge + h_matter + h_penalty).simplify()
    gauss_ops = {s: gauss_operator(lattice, s) for s in lattice.sites}
    bad = gauss_violations(h_total, gauss_ops)
    if bad:
        raise AssertionError(f"Hamiltonian breaks Gauss law: {bad[:3]}")
    if not h_total.is_hermitian():
        raise AssertionError("Hamiltonian has non-Hermitian terms")
    return HamiltonianBundle(lattice, params, charges, h_gauge, h_matter, h_penalty, h_total,
                             gauss_ops)
