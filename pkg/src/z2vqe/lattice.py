"""Two-leg ladder geometry.

Sites are ``(column, leg)`` with ``column`` in ``0..P`` and ``leg`` in
``{0, 1}``. A link is ``(site, direction)`` pointing from ``site`` to
``site + x`` (along a leg) or ``site + y`` (the rung).

Qubit layout: sites are visited in fermion order ``(0,0), (0,1), (1,0),
(1,1), ...``; each site takes the next qubit, followed immediately by
any of its incident links that have no qubit yet (rung first, then the
x-link leaving the site).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

Site = tuple[int, int]
Link = tuple[Site, str]

X_DIR = "x"
Y_DIR = "y"


def link_end(link: Link) -> Site:
    (c, leg), d = link
    return (c + 1, leg) if d == X_DIR else (c, leg + 1)


@dataclass(frozen=True)
class LadderLattice:
    n_plaquettes: int
    sites: tuple[Site, ...]
    links: tuple[Link, ...]
    plaquettes: tuple[tuple[Link, Link, Link, Link], ...]
    qubit_of_site: dict[Site, int] = field(hash=False, compare=False)
    qubit_of_link: dict[Link, int] = field(hash=False, compare=False)
    fermion_order: tuple[Site, ...]

    @property
    def n_qubits(self) -> int:
        return len(self.sites) + len(self.links)

    @property
    def matter_qubits(self) -> list[int]:
        return [self.qubit_of_site[s] for s in self.fermion_order]

    @property
    def link_qubits(self) -> list[int]:
        return [self.qubit_of_link[l] for l in self.links]

    def has_site(self, site: Site) -> bool:
        return site in self.qubit_of_site

    def check_site(self, site: Site) -> Site:
        site = (int(site[0]), int(site[1]))
        if site not in self.qubit_of_site:
            raise ValueError(f"site {site} is not on the P={self.n_plaquettes} ladder")
        return site

    def fermion_index(self, site: Site) -> int:
        return self.fermion_order.index(self.check_site(site))

    def layout(self) -> dict[int, dict]:
        """Qubit index -> description, JSON-ready."""
        out: dict[int, dict] = {}
        for s, q in self.qubit_of_site.items():
            out[q] = {"kind": "site", "coord": list(s), "direction": None}
        for (s, d), q in self.qubit_of_link.items():
            out[q] = {"kind": "link", "coord": list(s), "direction": d}
        return dict(sorted(out.items()))


def build_ladder(P: int) -> LadderLattice:
    if int(P) != P or P < 1:
        raise ValueError(f"number of plaquettes must be an integer >= 1, got {P}")
    P = int(P)
    sites = tuple((c, leg) for c in range(P + 1) for leg in (0, 1))
    links: list[Link] = []
    for c in range(P + 1):
        links.append(((c, 0), Y_DIR))
        if c < P:
            links.append(((c, 0), X_DIR))
            links.append(((c, 1), X_DIR))
    plaquettes = tuple(
        (((c, 0), X_DIR), ((c, 0), Y_DIR), ((c, 1), X_DIR), ((c + 1, 0), Y_DIR))
        for c in range(P))

    fermion_order = sites
    qubit_of_site: dict[Site, int] = {}
    qubit_of_link: dict[Link, int] = {}
    q = 0
    for s in fermion_order:
        qubit_of_site[s] = q
        q += 1
        for l in ((s, Y_DIR), (s, X_DIR)):
            if l in links and l not in qubit_of_link:
                qubit_of_link[l] = q
                q += 1
    assert q == 5 * P + 3
    return LadderLattice(P, sites, tuple(links), plaquettes, qubit_of_site, qubit_of_link,
                         fermion_order)


def staggered_sign(site: Site, lattice: LadderLattice | None = None) -> int:
    """``(-1)**(column + leg)``."""
    if lattice is not None:
        site = lattice.check_site(site)
    elif site[1] not in (0, 1) or site[0] < 0:
        raise ValueError(f"site {site} is not on a ladder")
    return -1 if (site[0] + site[1]) % 2 else 1


def links_of_site(lattice: LadderLattice, site: Site) -> list[Link]:
    site = lattice.check_site(site)
    return [l for l in lattice.links if l[0] == site or link_end(l) == site]


def neighbours(lattice: LadderLattice, site: Site) -> list[Site]:
    return [link_end(l) if l[0] == site else l[0] for l in links_of_site(lattice, site)]


def link_distance(lattice: LadderLattice, a: Site, b: Site) -> int:
    a = lattice.check_site(a)
    b = lattice.check_site(b)
    dist = {a: 0}
    queue = deque([a])
    while queue:
        s = queue.popleft()
        if s == b:
            return dist[s]
        for t in neighbours(lattice, s):
            if t not in dist:
                dist[t] = dist[s] + 1
                queue.append(t)
    raise AssertionError("ladder is connected")


@dataclass(frozen=True)
class StaticCharges:
    charged_sites: frozenset[Site] = frozenset()

    @classmethod
    def at(cls, lattice: LadderLattice, sites) -> StaticCharges:
        sites = [lattice.check_site(s) for s in sites]
        if len(set(sites)) != len(sites):
            raise ValueError("a site cannot carry more than one static charge")
        return cls(frozenset(sites))

    def q(self, site: Site) -> int:
        return -1 if tuple(site) in self.charged_sites else 1

    def q_of_site(self, lattice: LadderLattice) -> dict[Site, int]:
        return {s: self.q(s) for s in lattice.sites}
