"""Dense statevector simulation with bit-mask Pauli kernels.

Every gate used by the ansatz circuits is either a fixed single-qubit gate
or a rotation ``exp(-i angle/2 P)`` about a Pauli string ``P``. The latter is
applied as ``cos(angle/2) psi - i sin(angle/2) P psi`` where ``P psi`` is an
index permutation (XOR with the X mask) times a parity sign, so no matrix is
ever built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numba
import numpy as np

from .pauli import PauliString, PauliSum


@numba.njit(cache=True, inline="always")
def _parity(v):
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return v & 1


@numba.njit(cache=True, inline="always")
def _pair_index(i, h, low):
    # i-th index with bit h clear
    return ((i >> h) << (h + 1)) | (i & low)


@numba.njit(cache=True, inline="always")
def _top_bit(x):
    h = 0
    while (x >> (h + 1)) != 0:
        h += 1
    return h


@numba.njit(cache=True)
def _rotate(psi, x, z, factor, c, s):
    # psi <- c*psi - i*s*(factor * X^x Z^z) psi ; factor = i^(phase + n_y)
    n = psi.shape[0]
    ms = -1j * s * factor
    if x == 0:
        for b in range(n):
            if _parity(b & z):
                psi[b] *= c - ms
            else:
                psi[b] *= c + ms
        return
    h = _top_bit(x)
    low = (1 << h) - 1
    flip = _parity(x & z)
    for i in range(n >> 1):
        b = _pair_index(i, h, low)
        b2 = b ^ x
        a1 = psi[b]
        a2 = psi[b2]
        # (P psi)[b] = factor * sign(b2) * psi[b2], sign(b2) = sign(b) * (-1)^|x & z|
        p1 = _parity(b & z)
        s1 = 1.0 - 2.0 * p1
        s2 = 1.0 - 2.0 * (p1 ^ flip)
        psi[b] = c * a1 + ms * (s2 * a2)
        psi[b2] = c * a2 + ms * (s1 * a1)


@numba.njit(cache=True)
def _braket_rotate_back(lam, psi, x, z, factor, c, s):
    """Return <lam| P |psi>, then apply exp(+i t/2 P) to both vectors in one pass."""
    n = psi.shape[0]
    ms = -1j * s * factor
    acc = 0j
    if x == 0:
        for b in range(n):
            if _parity(b & z):
                acc -= lam[b].conjugate() * psi[b]
                psi[b] *= c - ms
                lam[b] *= c - ms
            else:
                acc += lam[b].conjugate() * psi[b]
                psi[b] *= c + ms
                lam[b] *= c + ms
        return factor * acc
    h = _top_bit(x)
    low = (1 << h) - 1
    flip = _parity(x & z)
    for i in range(n >> 1):
        b = _pair_index(i, h, low)
        b2 = b ^ x
        p1 = _parity(b & z)
        s1 = 1.0 - 2.0 * p1
        s2 = 1.0 - 2.0 * (p1 ^ flip)
        a1 = psi[b]
        a2 = psi[b2]
        l1 = lam[b]
        l2 = lam[b2]
        acc += s2 * l1.conjugate() * a2 + s1 * l2.conjugate() * a1
        psi[b] = c * a1 + ms * (s2 * a2)
        psi[b2] = c * a2 + ms * (s1 * a1)
        lam[b] = c * l1 + ms * (s2 * l2)
        lam[b2] = c * l2 + ms * (s1 * l1)
    return factor * acc


@numba.njit(cache=True)
def _apply_pauli(psi, out, x, z, factor):
    n = psi.shape[0]
    for b in range(n):
        b2 = b ^ x
        if _parity(b2 & z):
            out[b] = -factor * psi[b2]
        else:
            out[b] = factor * psi[b2]


@numba.njit(cache=True)
def _pauli_expval(psi, x, z):
    n = psi.shape[0]
    acc = 0j
    for b in range(n):
        b2 = b ^ x
        v = psi[b].conjugate() * psi[b2]
        if _parity(b2 & z):
            acc -= v
        else:
            acc += v
    return acc


@numba.njit(cache=True)
def _group_diagonals(n, zs, fs, starts, diag):
    # diag[g, c] = sum_k fs[k] * (-1)^|c & zs[k]| over the terms of group g
    for g in range(starts.shape[0] - 1):
        for c in range(n):
            acc = 0j
            for k in range(starts[g], starts[g + 1]):
                if _parity(c & zs[k]):
                    acc -= fs[k]
                else:
                    acc += fs[k]
            diag[g, c] = acc


@numba.njit(cache=True)
def _matvec_diag(psi, out, gxs, diag, constant):
    n = psi.shape[0]
    for b in range(n):
        out[b] = constant * psi[b]
    for g in range(gxs.shape[0]):
        x = gxs[g]
        for b in range(n):
            b2 = b ^ x
            out[b] += diag[g, b2] * psi[b2]


@numba.njit(cache=True)
def _expval_diag(psi, gxs, diag):
    n = psi.shape[0]
    acc = 0j
    for g in range(gxs.shape[0]):
        x = gxs[g]
        for b in range(n):
            b2 = b ^ x
            acc += psi[b].conjugate() * diag[g, b2] * psi[b2]
    return acc


@numba.njit(cache=True)
def _matvec_terms(psi, out, gxs, zs, fs, starts, constant):
    n = psi.shape[0]
    for b in range(n):
        out[b] = constant * psi[b]
    for g in range(gxs.shape[0]):
        x = gxs[g]
        for b in range(n):
            b2 = b ^ x
            acc = 0j
            for k in range(starts[g], starts[g + 1]):
                if _parity(b2 & zs[k]):
                    acc -= fs[k]
                else:
                    acc += fs[k]
            out[b] += acc * psi[b2]


@numba.njit(cache=True)
def _apply_1q(psi, q, u00, u01, u10, u11):
    n = psi.shape[0]
    bit = 1 << q
    for b in range(n):
        if b & bit == 0:
            a0 = psi[b]
            a1 = psi[b | bit]
            psi[b] = u00 * a0 + u01 * a1
            psi[b | bit] = u10 * a0 + u11 * a1


def _factor(p: PauliString) -> complex:
    return (1j) ** ((p.phase + p.n_y) % 4)


class StateVector:
    """``2**n`` complex amplitudes; qubit ``k`` is bit ``k`` of the index."""

    def __init__(self, n_qubits: int, amplitudes: np.ndarray | None = None):
        self.n_qubits = n_qubits
        if amplitudes is None:
            amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
            amplitudes[0] = 1.0
        else:
            amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
            if amplitudes.shape != (1 << n_qubits,):
                raise ValueError("amplitude vector has the wrong length")
        self.amplitudes = amplitudes

    @classmethod
    def zero(cls, n_qubits: int) -> StateVector:
        return cls(n_qubits)

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def apply(self, gate: Gate) -> StateVector:
        apply(self, gate)
        return self

    def apply_all(self, gates: Iterable[Gate]) -> StateVector:
        for g in gates:
            apply(self, g)
        return self


_H = 1 / math.sqrt(2)
_FIXED = {
    "H": (_H, _H, _H, -_H),
    "X": (0, 1, 1, 0),
    "SDG": (1, 0, 0, -1j),
    "S": (1, 0, 0, 1j),
}
GATE_KINDS = ("H", "X", "S", "SDG", "RX", "RZ", "PAULI_ROT")


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    generator: PauliString | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("gate targets must be distinct")
        if self.kind == "PAULI_ROT":
            if self.generator is None:
                raise ValueError("PAULI_ROT needs a generator")
            if not self.generator.is_hermitian:
                raise ValueError("rotation generator must be Hermitian")
        elif len(self.targets) != 1:
            raise ValueError(f"{self.kind} acts on exactly one qubit")

    @classmethod
    def pauli_rot(cls, generator: PauliString, angle: float | None = None) -> Gate:
        return cls("PAULI_ROT", tuple(generator.qubits()), angle, generator)

    @property
    def parametrized(self) -> bool:
        return self.kind in ("RX", "RZ", "PAULI_ROT")

    def rotation_generator(self, n_qubits: int) -> PauliString:
        if self.kind == "PAULI_ROT":
            return self.generator
        if self.kind == "RX":
            return PauliString.from_ops(n_qubits, [(self.targets[0], "X")])
        if self.kind == "RZ":
            return PauliString.from_ops(n_qubits, [(self.targets[0], "Z")])
        raise ValueError(f"{self.kind} is not a rotation")

    def bound(self, angle: float) -> Gate:
        return Gate(self.kind, self.targets, float(angle), self.generator)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "targets": list(self.targets)}
        if self.generator is not None:
            out["generator"] = str(self.generator)
        if self.angle is not None:
            out["angle"] = self.angle
        return out


def rotate(state: StateVector, generator: PauliString, angle: float) -> None:
    """In place ``exp(-i angle/2 P)``."""
    if generator.n_qubits != state.n_qubits:
        raise ValueError("generator size does not match state")
    _rotate(state.amplitudes, generator.x, generator.z, _factor(generator),
            math.cos(angle / 2), math.sin(angle / 2))


def braket_unrotate(lam: StateVector, psi: StateVector, generator: PauliString,
                    angle: float) -> complex:
    """``<lam|P|psi>``, then undo ``exp(-i angle/2 P)`` on both states in place."""
    return _braket_rotate_back(lam.amplitudes, psi.amplitudes, generator.x, generator.z,
                               _factor(generator), math.cos(angle / 2), -math.sin(angle / 2))


def apply(state: StateVector, gate: Gate) -> StateVector:
    for t in gate.targets:
        if not 0 <= t < state.n_qubits:
            raise IndexError(f"target {t} out of range for {state.n_qubits} qubits")
    if gate.kind in _FIXED:
        _apply_1q(state.amplitudes, gate.targets[0], *(complex(u) for u in _FIXED[gate.kind]))
    else:
        if gate.angle is None:
            raise ValueError("rotation gate has no angle bound")
        rotate(state, gate.rotation_generator(state.n_qubits), gate.angle)
    return state


def apply_pauli(state: StateVector, p: PauliString) -> StateVector:
    """New state ``P |psi>``."""
    out = np.empty_like(state.amplitudes)
    _apply_pauli(state.amplitudes, out, p.x, p.z, _factor(p))
    return StateVector(state.n_qubits, out)


def pauli_expectation(state: StateVector, p: PauliString) -> complex:
    if p.n_qubits != state.n_qubits:
        raise ValueError("operator size does not match state")
    return _factor(p) * _pauli_expval(state.amplitudes, p.x, p.z)


class PauliOperator:
    """A Pauli sum packed for repeated expectation values and matvecs.

    Terms sharing an X mask are merged into one diagonal, so applying the
    operator costs one pass per distinct X mask. The diagonals are stored
    when they fit in ``max_bytes``; otherwise they are recomputed per call.
    """

    def __init__(self, obs: PauliSum, max_bytes: int = 1 << 29):
        self.n_qubits = obs.n_qubits
        self.hermitian = obs.is_hermitian()
        terms = [(c, p) for c, p in obs.terms if c != 0]
        self.constant = complex(sum(c * p.phase_value for c, p in terms if p.support == 0))
        groups: dict[int, list] = {}
        for c, p in terms:
            if p.support != 0:
                groups.setdefault(p.x, []).append((p.z, c * _factor(p)))
        self.gxs = np.array(list(groups), dtype=np.int64)
        self.zs = np.array([z for g in groups.values() for z, _ in g], dtype=np.int64)
        self.fs = np.array([f for g in groups.values() for _, f in g], dtype=np.complex128)
        self.starts = np.cumsum([0] + [len(g) for g in groups.values()]).astype(np.int64)
        self.norm1 = float(np.abs(self.fs).sum() + abs(self.constant))
        dim = 1 << self.n_qubits
        self.diag = None
        if len(groups) * dim * 16 <= max_bytes:
            self.diag = np.empty((len(groups), dim), dtype=np.complex128)
            _group_diagonals(dim, self.zs, self.fs, self.starts, self.diag)

    def matvec(self, psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        psi = np.ascontiguousarray(psi, dtype=np.complex128)
        if out is None:
            out = np.empty_like(psi)
        if self.diag is not None:
            _matvec_diag(psi, out, self.gxs, self.diag, self.constant)
        else:
            _matvec_terms(psi, out, self.gxs, self.zs, self.fs, self.starts, self.constant)
        return out

    def expectation_complex(self, psi: np.ndarray) -> complex:
        psi = np.ascontiguousarray(psi, dtype=np.complex128)
        if self.diag is not None:
            val = _expval_diag(psi, self.gxs, self.diag)
            return complex(val + self.constant * np.vdot(psi, psi))
        return complex(np.vdot(psi, self.matvec(psi)))


def expectation(state: StateVector, obs: PauliSum | PauliOperator) -> float:
    op = obs if isinstance(obs, PauliOperator) else PauliOperator(obs)
    if op.n_qubits != state.n_qubits:
        raise ValueError(f"observable acts on {op.n_qubits} qubits, state has {state.n_qubits}")
    val = op.expectation_complex(state.amplitudes)
    scale = max(1.0, op.norm1)
    if abs(val.imag) > 1e-10 * scale:
        raise ValueError(f"non-Hermitian observable: imaginary part {val.imag}")
    return float(val.real)


# --- shot sampling -----------------------------------------------------------------

def _qwc(a: PauliString, b: PauliString) -> bool:
    overlap = a.support & b.support
    return ((a.x ^ b.x) & overlap) == 0 and ((a.z ^ b.z) & overlap) == 0


def qwc_groups(obs: PauliSum) -> list[list[tuple[float, PauliString]]]:
    """Greedy first-fit partition of non-identity terms into qubit-wise commuting groups."""
    groups: list[list[tuple[float, PauliString]]] = []
    for c, p in obs.terms:
        if p.support == 0:
            continue
        for g in groups:
            if all(_qwc(p, q) for _, q in g):
                g.append((c, p))
                break
        else:
            groups.append([(c, p)])
    return groups


def _measure_basis_state(state: StateVector, group) -> StateVector:
    out = state.copy()
    x = z = 0
    for _, p in group:
        x |= p.x
        z |= p.z
    for q in range(state.n_qubits):
        bit = 1 << q
        if x & bit and z & bit:
            apply(out, Gate("SDG", (q,)))
            apply(out, Gate("H", (q,)))
        elif x & bit:
            apply(out, Gate("H", (q,)))
    return out


def sample_expectation(state: StateVector, obs: PauliSum, shots: int,
                       rng_seed: int | np.random.Generator | None = None) -> float:
    """Unbiased shot estimate of ``<obs>``.

    The total budget ``shots`` is split evenly over qubit-wise commuting
    groups, remainder to the earliest groups; each group must receive at
    least one shot.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if obs.n_qubits != state.n_qubits:
        raise ValueError("observable size does not match state")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    groups = qwc_groups(obs)
    total = sum(c * p.phase_value.real for c, p in obs.terms if p.support == 0)
    if not groups:
        return float(total)
    if shots < len(groups):
        raise ValueError(f"{shots} shots cannot cover {len(groups)} measurement groups")
    base, extra = divmod(shots, len(groups))
    for i, group in enumerate(groups):
        n_shots = base + (1 if i < extra else 0)
        probs = _measure_basis_state(state, group).probabilities()
        probs /= probs.sum()
        counts = rng.multinomial(n_shots, probs)
        outcomes = np.nonzero(counts)[0]
        weights = counts[outcomes]
        for c, p in group:
            parity = np.bitwise_count(outcomes & p.support) & 1
            eig = 1.0 - 2.0 * parity.astype(np.float64)
            total += c * p.phase_value.real * float(weights @ eig) / n_shots
    return float(total)


# --- Gauss law diagnostics ---------------------------------------------------------

def gauss_expectations(state: StateVector, gauss_ops) -> dict:
    """``<G_l>`` per site, staggered sign included."""
    return {s: sign * pauli_expectation(state, p).real for s, (p, sign) in gauss_ops.items()}


def gauss_fidelity(state: StateVector, gauss_ops, charges=None) -> float:
    """Site average of ``<(1 + q_l G_l)/2>``; equals 1 exactly on the charge sector."""
    vals = gauss_expectations(state, gauss_ops)
    q = (lambda s: 1) if charges is None else charges.q
    return float(np.mean([(1 + q(s) * g) / 2 for s, g in vals.items()]))


def gauss_average(state: StateVector, gauss_ops, charges=None) -> float:
    """Site average of ``q_l <G_l>`` (the raw-expectation variant of the fidelity)."""
    vals = gauss_expectations(state, gauss_ops)
    q = (lambda s: 1) if charges is None else charges.q
    return float(np.mean([q(s) * g for s, g in vals.items()]))


def run_circuit(n_qubits: int, gates: Sequence[Gate]) -> StateVector:
    return StateVector.zero(n_qubits).apply_all(gates)
