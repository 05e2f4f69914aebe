import numpy as np
import pytest
from hypothesis import given, strategies as st

from z2vqe.pauli import PauliString, PauliSum, commutes, mul, simplify

N = 3


@st.composite
def strings(draw, n=N):
    x = draw(st.integers(0, (1 << n) - 1))
    z = draw(st.integers(0, (1 << n) - 1))
    return PauliString(n, x, z, draw(st.integers(0, 3)))


@st.composite
def sums(draw, n=N):
    terms = draw(st.lists(st.tuples(st.floats(-3, 3), strings(n)), max_size=6))
    return PauliSum(n, tuple(terms))


@given(strings(), strings())
def test_product_matches_matrices(a, b):
    assert np.allclose(mul(a, b).to_matrix(), a.to_matrix() @ b.to_matrix())


@given(strings(), strings(), strings())
def test_product_is_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


@given(strings(), strings())
def test_commutes_agrees_with_commutator(a, b):
    ma, mb = a.to_matrix(), b.to_matrix()
    assert commutes(a, b) == np.allclose(ma @ mb, mb @ ma)


@given(strings())
def test_square_of_hermitian_string_is_identity(p):
    h = p.with_phase(0)
    assert h * h == PauliString.identity(N)


@given(strings())
def test_adjoint_is_conjugate_transpose(p):
    assert np.allclose(p.adjoint().to_matrix(), p.to_matrix().conj().T)


@given(sums())
def test_simplify_preserves_operator_and_is_idempotent(s):
    try:
        once = simplify(s)
    except ValueError:
        return  # mixed real/imaginary amplitude, rejected by design
    assert np.allclose(once.to_matrix(), s.to_matrix(), atol=1e-9)
    assert simplify(once) == once


@given(strings())
def test_string_text_round_trip(p):
    assert PauliString.parse(str(p), N) == p


@given(sums())
def test_sum_text_round_trip(s):
    assert PauliSum.parse(str(s), N) == s


def test_y_convention():
    y = PauliString.parse("Y0", 1)
    assert np.allclose(y.to_matrix(), [[0, -1j], [1j, 0]])
    assert PauliString.parse("X0", 1) * PauliString.parse("Z0", 1) == PauliString.parse("-i Y0", 1)


def test_little_endian_qubit_order():
    x1 = PauliString.parse("X1", 2).to_matrix()
    e0 = np.zeros(4)
    e0[0] = 1
    assert np.argmax(np.abs(x1 @ e0)) == 2


def test_simplify_drops_cancelled_terms():
    s = PauliSum.parse("1.0 * X0 Z1\n-1.0 * X0 Z1\n0.5 * I", 2)
    out = s.simplify()
    assert len(out) == 1 and out.constant() == 0.5


def test_simplify_rejects_mixed_amplitude():
    s = PauliSum.parse("1.0 * X0\n1.0 * i X0", 1)
    with pytest.raises(ValueError):
        s.simplify()


def test_empty_sum_prints_zero():
    assert str(PauliSum.zero(2)) == "0"
    assert len(PauliSum.parse("0", 2)) == 0


@pytest.mark.parametrize("bad", ["X", "Q0", "X0 X0", "I X0"])
def test_parse_errors(bad):
    with pytest.raises(ValueError):
        PauliString.parse(bad, 2)


def test_size_mismatch_raises():
    with pytest.raises(ValueError):
        mul(PauliString(2), PauliString(3))
    with pytest.raises(ValueError):
        commutes(PauliString(2), PauliString(3))


def test_qubit_out_of_range():
    with pytest.raises(IndexError):
        PauliString.from_ops(2, {2: "X"})
