"""Exact ground-state references: dense diagonalisation and restarted Lanczos."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import StaticCharges
from .pauli import PauliString, PauliSum
from .state import PauliOperator, StateVector, gauss_fidelity

DENSE_MAX_QUBITS = 14
LANCZOS_MAX_QUBITS = 18
KEEP_STATE_MAX_QUBITS = 16


class CapacityError(ValueError):
    pass


class LanczosNotConverged(RuntimeError):
    def __init__(self, message: str, best: SpectrumResult):
        super().__init__(message)
        self.best = best


@dataclass
class SpectrumResult:
    ground_energy: float
    ground_state: StateVector | None
    residual: float
    method: str
    iterations: int = 0


def _residual(op: PauliOperator, vec: np.ndarray, energy: float) -> float:
    return float(np.linalg.norm(op.matvec(vec) - energy * vec))


def dense_ground(h: PauliSum, symmetries: list[PauliString] | None = None,
                 keep_state: bool = True) -> SpectrumResult:
    """Minimum eigenpair by full Hermitian diagonalisation.

    With ``symmetries`` (qubit-wise commuting Pauli strings that commute with
    every term of ``h``) the matrix is built block by block in their joint
    eigenbasis and each block is diagonalised fully.
    """
    n = h.n_qubits
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"dense diagonalisation limited to {DENSE_MAX_QUBITS} qubits, got {n}")
    if symmetries:
        energy, vec = _block_ground(h, symmetries)
        method = "dense-blocks"
    else:
        mat = h.to_matrix()
        w, v = np.linalg.eigh(mat)
        energy, vec = float(w[0]), v[:, 0]
        method = "dense"
    res = _residual(PauliOperator(h), vec, energy)
    state = StateVector(n, vec) if keep_state else None
    return SpectrumResult(energy, state, res, method)


def _shared_basis(symmetries: list[PauliString]) -> tuple[int, int]:
    """Qubits whose shared single-qubit basis is X (resp. Y); raises if not QWC."""
    x_q = y_q = z_q = 0
    for s in symmetries:
        x_q |= s.x & ~s.z
        y_q |= s.x & s.z
        z_q |= s.z & ~s.x
    if (x_q & y_q) or (x_q & z_q) or (y_q & z_q):
        raise ValueError("symmetries are not qubit-wise commuting")
    return x_q, y_q


def _rotated(p: PauliString, x_q: int, y_q: int) -> tuple[int, int, complex]:
    """Masks and amplitude factor of ``U p U^dag`` where ``U`` maps X/Y-basis qubits to Z."""
    # per qubit: H X H = Z, H Z H = X, H Y H = -Y ; with H S^dag: Y -> Z, Z -> X, X -> Y
    x, z = p.x, p.z
    sign = 1
    for q in range(p.n_qubits):
        bit = 1 << q
        if x_q & bit:
            bx, bz = bool(x & bit), bool(z & bit)
            if bx and bz:
                sign = -sign
            x = (x & ~bit) | (bit if bz else 0)
            z = (z & ~bit) | (bit if bx else 0)
        elif y_q & bit:
            bx, bz = bool(x & bit), bool(z & bit)
            if bx and bz:       # Y -> Z
                x &= ~bit
            elif bx:            # X -> Y
                z |= bit
            elif bz:            # Z -> X
                x |= bit
                z &= ~bit
    rot = PauliString(p.n_qubits, x, z, p.phase)
    return x, z, sign * rot.phase_value * (1j ** rot.n_y)


def _block_ground(h: PauliSum, symmetries: list[PauliString]):
    n = h.n_qubits
    x_q, y_q = _shared_basis(symmetries)
    dim = 1 << n
    idx = np.arange(dim)
    # symmetry eigenvalue pattern of each rotated basis state (rotated symmetries are Z strings)
    label = np.zeros(dim, dtype=np.int64)
    for k, s in enumerate(symmetries):
        parity = np.bitwise_count(idx & s.support).astype(np.int64) & 1
        label |= parity << k
    terms = [(c, *_rotated(p, x_q, y_q)) for c, p in h.terms]
    best_e, best_block, best_vec = np.inf, None, None
    for lab in np.unique(label):
        block = np.nonzero(label == lab)[0]
        pos = np.full(dim, -1, dtype=np.int64)
        pos[block] = np.arange(block.size)
        mat = np.zeros((block.size, block.size), dtype=complex)
        for c, x, z, amp in terms:
            rows = pos[block ^ x]
            if np.any(rows < 0):
                raise ValueError("Hamiltonian term does not commute with the symmetries")
            signs = 1 - 2 * (np.bitwise_count(block & z).astype(np.int64) & 1)
            mat[rows, np.arange(block.size)] += c * amp * signs
        w, v = np.linalg.eigh(mat)
        if w[0] < best_e:
            best_e, best_block, best_vec = float(w[0]), block, v[:, 0]
    rotated = np.zeros(dim, dtype=complex)
    rotated[best_block] = best_vec
    return best_e, _unrotate(rotated, n, x_q, y_q)


def _unrotate(vec: np.ndarray, n: int, x_q: int, y_q: int) -> np.ndarray:
    from .state import Gate, apply
    state = StateVector(n, vec)
    for q in range(n):
        bit = 1 << q
        if x_q & bit:
            apply(state, Gate("H", (q,)))
        elif y_q & bit:
            # U = H S^dag per qubit, so U^dag = S H
            apply(state, Gate("H", (q,)))
            apply(state, Gate("S", (q,)))
    return state.amplitudes


def _tridiag_eigh(alphas, betas):
    tri = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
    return np.linalg.eigh(tri)


def lanczos_ground(h: PauliSum, max_krylov: int = 60, tol: float = 1e-11, seed: int = 0,
                   v0: np.ndarray | None = None, max_restarts: int = 200,
                   keep_state: bool | None = None, residual_tol: float = 1e-9) -> SpectrumResult:
    """Restarted Lanczos with full reorthogonalisation and a matrix-free Pauli matvec.

    Each cycle builds at most ``max_krylov`` Krylov vectors, then restarts
    from the current ground Ritz vector. Converged when the Ritz value moves
    by less than ``tol`` between cycles and ``||H v - E v|| < residual_tol``.
    """
    n = h.n_qubits
    if n > LANCZOS_MAX_QUBITS:
        raise CapacityError(f"Lanczos limited to {LANCZOS_MAX_QUBITS} qubits, got {n}")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if keep_state is None:
        keep_state = n <= KEEP_STATE_MAX_QUBITS
    op = PauliOperator(h)
    dim = 1 << n
    if v0 is None:
        rng = np.random.default_rng(seed)
        v0 = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v = np.asarray(v0, dtype=complex).copy()
    v /= np.linalg.norm(v)
    m = min(max_krylov, dim)
    basis = np.empty((m + 1, dim), dtype=complex)
    w = np.empty(dim, dtype=complex)
    prev = np.inf
    energy, residual, iterations = np.inf, np.inf, 0
    for cycle in range(max_restarts):
        basis[0] = v
        alphas, betas = [], []
        k = 0
        for j in range(m):
            op.matvec(basis[j], out=w)
            iterations += 1
            alphas.append(float(np.vdot(basis[j], w).real))
            for _ in range(2):
                overlaps = (basis[: j + 1] @ w.conj()).conj()
                w -= overlaps @ basis[: j + 1]
            b = float(np.linalg.norm(w))
            k = j + 1
            exhausted = b < 1e-13 * max(1.0, abs(alphas[-1]))
            if not exhausted:
                betas.append(b)
                basis[j + 1] = w / b
            if exhausted or j == m - 1 or k % 5 == 0:
                evals, evecs = _tridiag_eigh(alphas, betas[: k - 1])
                estimate = abs(b * evecs[-1, 0]) if not exhausted else 0.0
                moved = abs(evals[0] - prev)
                prev = float(evals[0])
                if exhausted or j == m - 1 or (estimate < residual_tol and moved < tol):
                    break
        energy = prev
        v = evecs[:, 0] @ basis[:k]
        v /= np.linalg.norm(v)
        residual = _residual(op, v, energy)
        if residual < residual_tol and (moved < tol or exhausted):
            state = StateVector(n, v) if keep_state else None
            return SpectrumResult(energy, state, residual, "lanczos", iterations)
    best = SpectrumResult(energy, StateVector(n, v) if keep_state else None, residual,
                          "lanczos", iterations)
    raise LanczosNotConverged(
        f"Lanczos did not converge after {max_restarts} restarts (residual {residual:.2e})", best)


def ground(h: PauliSum, symmetries=None, **kwargs) -> SpectrumResult:
    """Dense (blockwise if symmetries are given) up to 12 qubits, Lanczos beyond."""
    if h.n_qubits <= 8 or (symmetries and h.n_qubits <= 13):
        return dense_ground(h, symmetries, keep_state=kwargs.get("keep_state", True) is not False)
    return lanczos_ground(h, **kwargs)


def sector_start_vector(gauss_ops, charges: StaticCharges, n_qubits: int, seed: int = 0):
    """Random vector projected onto the charge sector with ``prod (1 + q G)/2``."""
    from .state import apply_pauli
    rng = np.random.default_rng(seed)
    dim = 1 << n_qubits
    state = StateVector(n_qubits, rng.normal(size=dim) + 1j * rng.normal(size=dim))
    for site, (p, sign) in gauss_ops.items():
        g = apply_pauli(state, p)
        state.amplitudes = 0.5 * (state.amplitudes + charges.q(site) * sign * g.amplitudes)
    norm = np.linalg.norm(state.amplitudes)
    if norm < 1e-8:
        raise ValueError("charge sector is empty")
    return state.amplitudes / norm


def sector_shift(h: PauliSum) -> float:
    """Default penalty scale: ten times the 1-norm of the coefficients."""
    return 10.0 * sum(abs(c) for c, _ in h.terms)


def sector_ground(h: PauliSum, gauss_ops, charges: StaticCharges | None = None,
                  shift: float | None = None, method: str = "auto", seed: int = 0,
                  keep_state: bool = True, **lanczos_kwargs) -> SpectrumResult:
    """Ground state restricted to the sector ``G_l = q_l`` via ``2*shift*sum(1 - q_l G_l)``.

    Lanczos starts from a vector already projected onto the sector; the shift
    keeps round-off leakage out of the low spectrum.
    """
    charges = charges or StaticCharges()
    shift = sector_shift(h) if shift is None else shift
    n = h.n_qubits
    terms = list(h.terms)
    for site, (p, sign) in gauss_ops.items():
        terms.append((2 * shift, PauliString(n)))
        terms.append((-2 * shift * charges.q(site) * sign, p))
    shifted = PauliSum(n, tuple(terms)).simplify()
    if method == "auto":
        method = "dense" if n <= 8 else "lanczos"
    if method == "dense":
        res = dense_ground(shifted, keep_state=True)
    elif method == "dense-blocks":
        res = dense_ground(shifted, symmetries=[p for p, _ in gauss_ops.values()])
    else:
        v0 = sector_start_vector(gauss_ops, charges, n, seed)
        res = lanczos_ground(shifted, v0=v0, keep_state=True, **lanczos_kwargs)
    fid = gauss_fidelity(res.ground_state, gauss_ops, charges)
    if abs(fid - 1) > 1e-8:
        raise AssertionError(f"sector ground state left the sector (fidelity {fid})")
    if not keep_state:
        res.ground_state = None
    return res
