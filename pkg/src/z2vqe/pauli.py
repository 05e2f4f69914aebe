"""Pauli strings and real-coefficient Pauli sums in symplectic form.

A ``PauliString`` stores two integer bitsets: bit ``k`` of ``x`` / ``z``
marks an X / Z factor on qubit ``k`` (both set means Y). The string denotes

    i**phase * sigma_0 (x) sigma_1 (x) ... (x) sigma_{n-1}

with each ``sigma_k`` the Hermitian single-qubit Pauli (I, X, Y or Z).
Qubit ``k`` is bit ``k`` of a computational basis index (little-endian).

Text notation
-------------
String:  ``[phase] op op ...``  where phase is one of ``+ - i -i`` (default
``+``) and each op is ``X3``, ``Y0``, ``Z12``; the identity is ``I``.
Sum:     one term per line, ``<coeff> * <string>`` with ``coeff`` a float.
An empty sum prints as ``0``.
"""
from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Iterator

import numpy as np

DEFAULT_DROP_TOL = 1e-12

_PHASE_VALUES = (1, 1j, -1, -1j)
_PHASE_TOKENS = {"+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}
_PHASE_TEXT = ("", "i ", "- ", "-i ")
_OP_RE = re.compile(r"^([IXYZ])(\d*)$")


def _popcount(v: int) -> int:
    return v.bit_count()


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0  # power of i

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("mask exceeds n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def from_ops(cls, n_qubits: int, ops: dict[int, str] | Iterable[tuple[int, str]],
                 phase: int = 0) -> PauliString:
        """Build from ``{qubit: 'X'|'Y'|'Z'|'I'}``."""
        items = ops.items() if isinstance(ops, dict) else ops
        x = z = 0
        for q, op in items:
            if not 0 <= q < n_qubits:
                raise IndexError(f"qubit {q} out of range for {n_qubits} qubits")
            bit = 1 << q
            if (x | z) & bit:
                raise ValueError(f"qubit {q} given twice")
            if op in ("X", "Y"):
                x |= bit
            if op in ("Z", "Y"):
                z |= bit
            if op not in "IXYZ":
                raise ValueError(f"unknown Pauli {op!r}")
        return cls(n_qubits, x, z, phase)

    @classmethod
    def parse(cls, text: str, n_qubits: int) -> PauliString:
        tokens = text.replace("−", "-").split()
        phase = 0
        if tokens and tokens[0] in _PHASE_TOKENS:
            phase = _PHASE_TOKENS[tokens.pop(0)]
        ops = []
        for tok in tokens:
            m = _OP_RE.match(tok)
            if m is None:
                raise ValueError(f"bad Pauli token {tok!r}")
            if m.group(1) == "I":
                if m.group(2):
                    continue
                if len(tokens) != 1:
                    raise ValueError("bare 'I' must stand alone")
                continue
            if not m.group(2):
                raise ValueError(f"missing qubit index in {tok!r}")
            ops.append((int(m.group(2)), m.group(1)))
        return cls.from_ops(n_qubits, ops, phase)

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def phase_value(self) -> complex:
        return _PHASE_VALUES[self.phase]

    def op(self, qubit: int) -> str:
        bx = (self.x >> qubit) & 1
        bz = (self.z >> qubit) & 1
        return "IXZY"[bx + 2 * bz]

    def ops(self) -> list[tuple[int, str]]:
        return [(q, self.op(q)) for q in range(self.n_qubits) if (self.support >> q) & 1]

    def qubits(self) -> list[int]:
        return [q for q in range(self.n_qubits) if (self.support >> q) & 1]

    def with_phase(self, phase: int) -> PauliString:
        return PauliString(self.n_qubits, self.x, self.z, phase)

    def unsigned(self) -> PauliString:
        return self.with_phase(0)

    def adjoint(self) -> PauliString:
        return self.with_phase(-self.phase)

    def __mul__(self, other: PauliString) -> PauliString:
        return mul(self, other)

    def __neg__(self) -> PauliString:
        return self.with_phase(self.phase + 2)

    def __str__(self) -> str:
        body = " ".join(f"{op}{q}" for q, op in self.ops()) or "I"
        return _PHASE_TEXT[self.phase] + body

    def to_matrix(self) -> np.ndarray:
        return PauliSum(self.n_qubits, ((1.0, self),)).to_matrix()


def _check_sizes(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def mul(a: PauliString, b: PauliString) -> PauliString:
    """Pauli group product ``a @ b`` with exact phase."""
    _check_sizes(a, b)
    # sigma-form -> X^x Z^z form picks up i**n_y; X^z Z^x reordering gives (-1)**|za & xb|
    x = a.x ^ b.x
    z = a.z ^ b.z
    phase = (a.phase + b.phase + a.n_y + b.n_y + 2 * _popcount(a.z & b.x)
             - _popcount(x & z))
    return PauliString(a.n_qubits, x, z, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_sizes(a, b)
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


@dataclass(frozen=True)
class PauliSum:
    """Real linear combination of Pauli strings.

    Complex amplitudes are carried by the strings' phases, so e.g. the
    lowering operator (X + iY)/2 is ``0.5 * X0 + 0.5 * i Y0``.
    """

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...] = ()

    def __post_init__(self):
        terms = tuple((float(c), p) for c, p in self.terms)
        for _, p in terms:
            if p.n_qubits != self.n_qubits:
                raise ValueError("all terms must share n_qubits")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_string(cls, p: PauliString, coeff: float = 1.0) -> PauliSum:
        return cls(p.n_qubits, ((coeff, p),))

    @classmethod
    def identity(cls, n_qubits: int, coeff: float = 1.0) -> PauliSum:
        return cls(n_qubits, ((coeff, PauliString(n_qubits)),))

    @classmethod
    def zero(cls, n_qubits: int) -> PauliSum:
        return cls(n_qubits)

    @classmethod
    def parse(cls, text: str, n_qubits: int) -> PauliSum:
        terms = []
        for line in text.strip().splitlines():
            line = line.strip().replace("−", "-")
            if not line or line == "0":
                continue
            coeff, sep, body = line.partition("*")
            if not sep:
                raise ValueError(f"term {line!r} lacks '<coeff> * <string>' form")
            terms.append((float(coeff), PauliString.parse(body, n_qubits)))
        return cls(n_qubits, tuple(terms))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        return iter(self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return "\n".join(f"{c!r} * {p}" for c, p in self.terms)

    def __add__(self, other: PauliSum) -> PauliSum:
        if other.n_qubits != self.n_qubits:
            raise ValueError("dimension mismatch")
        return PauliSum(self.n_qubits, self.terms + other.terms)

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + other.scale(-1.0)

    def scale(self, factor: float) -> PauliSum:
        return PauliSum(self.n_qubits, tuple((factor * c, p) for c, p in self.terms))

    def __rmul__(self, factor: float) -> PauliSum:
        return self.scale(factor)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            if other.n_qubits != self.n_qubits:
                raise ValueError("dimension mismatch")
            return PauliSum(self.n_qubits, tuple(
                (ca * cb, mul(pa, pb)) for ca, pa in self.terms for cb, pb in other.terms))
        if isinstance(other, PauliString):
            return self * PauliSum.from_string(other)
        return self.scale(other)

    def adjoint(self) -> PauliSum:
        return PauliSum(self.n_qubits, tuple((c, p.adjoint()) for c, p in self.terms))

    def simplify(self, drop_tol: float = DEFAULT_DROP_TOL) -> PauliSum:
        return simplify(self, drop_tol)

    def constant(self) -> float:
        """Coefficient of the identity (after simplification)."""
        for c, p in self.simplify().terms:
            if p.support == 0:
                return c
        return 0.0

    def is_hermitian(self) -> bool:
        return all(p.is_hermitian for _, p in self.terms)

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix; only sensible for small ``n``."""
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        cols = np.arange(dim)
        for c, p in self.terms:
            rows = cols ^ p.x
            signs = 1 - 2 * (np.bitwise_count(cols & p.z) & 1).astype(np.int64)
            amp = c * p.phase_value * (1j ** p.n_y)
            out[rows, cols] += amp * signs
        return out


def simplify(s: PauliSum, drop_tol: float = DEFAULT_DROP_TOL) -> PauliSum:
    """Merge equal strings, drop negligible terms, sort by (z, x).

    Merged amplitudes must be purely real or purely imaginary; they are
    re-expressed with phase ``+1`` or ``+i`` respectively.
    """
    if drop_tol < 0:
        raise ValueError("drop_tol must be >= 0")
    acc: dict[tuple[int, int], complex] = defaultdict(complex)
    for c, p in s.terms:
        acc[(p.z, p.x)] += c * p.phase_value
    terms = []
    for (z, x), w in sorted(acc.items()):
        re_small = abs(w.real) <= drop_tol
        im_small = abs(w.imag) <= drop_tol
        if re_small and im_small:
            continue
        if im_small:
            terms.append((w.real, PauliString(s.n_qubits, x, z, 0)))
        elif re_small:
            terms.append((w.imag, PauliString(s.n_qubits, x, z, 1)))
        else:
            raise ValueError(
                f"amplitude {w} on {PauliString(s.n_qubits, x, z)} is not real or imaginary")
    return PauliSum(s.n_qubits, tuple(terms))


def total(sums: Iterable[PauliSum], n_qubits: int) -> PauliSum:
    return reduce(lambda a, b: a + b, sums, PauliSum.zero(n_qubits))
