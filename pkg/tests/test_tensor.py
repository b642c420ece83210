from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from einmax.tensor import (
    ZERO,
    Covector4,
    GaussRational,
    Matrix4,
    UndefinedEntryError,
    exact_det,
    exact_solve,
    format_rational,
    is_lightlike_future,
    minkowski_pairing,
    parse_rational,
    sandwich,
    weighted_trace,
)
from einmax.errors import SingularSystemError

import oracles

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=40)
gauss = st.builds(lambda a, b: GaussRational(a, b), fractions, fractions)


def F1():
    return Matrix4([[0, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 1], [-1, 0, -1, 0]], kind="antisymmetric")


def F2():
    return Matrix4([[0, 0, 1, 0], [0, 0, 0, 0], [-1, 0, 0, -1], [0, 0, 1, 0]], kind="antisymmetric")


def F3():
    q = Fraction(-3, 4)
    return Matrix4([[0, 0, 0, q], [0, 0, 0, q], [0, 0, 0, 0], [-q, -q, 0, 0]], kind="antisymmetric")


def F4():
    return Matrix4([[0, 0, 0, 1], [0, 0, 0, -1], [0, 0, 0, 0], [-1, 1, 0, 0]], kind="antisymmetric")


@st.composite
def antisym(draw):
    rows = [[ZERO] * 4 for _ in range(4)]
    for a in range(4):
        for b in range(a + 1, 4):
            v = draw(gauss)
            rows[a][b] = v
            rows[b][a] = -v
    return Matrix4(rows, kind="antisymmetric")


def test_gauss_arithmetic_matches_component_formulas():
    x = GaussRational("1/2", "-3")
    y = GaussRational(2, "5/7")
    assert x * y == GaussRational(Fraction(1, 2) * 2 + 3 * Fraction(5, 7), Fraction(1, 2) * Fraction(5, 7) - 6)
    assert (x / y) * y == x
    assert GaussRational(0, 1) ** 2 == GaussRational(-1)


def test_floats_are_refused():
    with pytest.raises(TypeError):
        GaussRational(0.5)
    with pytest.raises(TypeError):
        Covector4([1.0, 0, 0, 0])


def test_rational_strings_round_trip():
    for text in ("0", "-7/4", "9/4", "3"):
        assert format_rational(parse_rational(text)) == text
    assert format_rational(parse_rational("6/8")) == "3/4"
    with pytest.raises(ValueError):
        parse_rational("1/0")


@given(gauss, gauss, gauss)
def test_field_axioms_exact(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    if not b.is_zero():
        assert (a / b) * b == a


def test_pairing_examples():
    assert minkowski_pairing((1, 0, 1, 0), (1, 0, 0, 1)) == GaussRational(-1)
    assert minkowski_pairing((1, 0, 0, 0), (1, 0, 0, 0)) == GaussRational(-1)
    assert minkowski_pairing((1, 0, 1, 0), ("-3/4", "-3/4", 0, 0)) == GaussRational("3/4")


def test_lightlike_future_examples():
    assert is_lightlike_future((1, 0, 1, 0))
    assert not is_lightlike_future((1, 0, 0, 0))
    assert is_lightlike_future(("9/4", "-7/4", 1, 1))
    assert not is_lightlike_future(("-3/4", "-3/4", 0, 0))
    with pytest.raises(ValueError):
        is_lightlike_future((GaussRational(1, 1), 0, 0, 0))


def test_weighted_trace_examples():
    assert weighted_trace(F2(), F3()) == GaussRational(0)
    assert weighted_trace(F3(), F4()) == GaussRational(3)
    assert weighted_trace(F1(), F1()) == GaussRational(0)


def test_sandwich_examples():
    # F.H.F at (0,0) is F_03 * h^33 * F_30 = -1; the component formula
    # -sum_l h^ll F_0l F_0l evaluates to the same number.
    S = sandwich(F1(), F1())
    assert S[0, 0] == GaussRational(-1)
    assert oracles.sandwich(oracles.mat(F1()), oracles.mat(F1()))[0][0] == oracles.C(-1)
    assert sandwich(Matrix4.zeros(), F2()).is_zero()
    ref = oracles.mat(F1())
    ref2 = oracles.mat(F2())
    comp = [[-sum(oracles.ETA[l] * ref[a][l] * ref2[b][l] for l in range(4)) for b in range(4)] for a in range(4)]
    assert oracles.mat(sandwich(F1(), F2())) == comp


@settings(max_examples=40, deadline=None)
@given(antisym(), antisym())
def test_trace_and_sandwich_match_index_loops(F, G):
    assert oracles.num(weighted_trace(F, G)) == oracles.trace(oracles.mat(F), oracles.mat(G))
    assert oracles.mat(sandwich(F, G)) == oracles.sandwich(oracles.mat(F), oracles.mat(G))


@given(antisym())
def test_trace_is_symmetric_and_evaluation_order_free(F):
    G = F.scale(GaussRational(2, 1))
    assert weighted_trace(F, G) == weighted_trace(G, F)
    assert weighted_trace(F + G, F) == weighted_trace(F, F) + weighted_trace(G, F)


def test_matrix_kinds():
    with pytest.raises(ValueError):
        Matrix4([[0, 1, 0, 0], [1, 0, 0, 0], [0] * 4, [0] * 4], kind="antisymmetric")
    M = Matrix4([[1, 2, 0, 0], [2, 3, 0, 0], [0] * 4, [0] * 4], kind="symmetric").off_diagonal_symmetric()
    assert M[0, 1] == GaussRational(2)
    with pytest.raises(UndefinedEntryError):
        M[0, 0]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(fractions, min_size=4, max_size=4), min_size=4, max_size=4))
def test_exact_det_matches_cofactor_oracle(rows):
    want = oracles.cofactor_det(rows)
    assert oracles.num(exact_det(rows)) == want


def test_exact_solve_and_singular():
    A = [[2, 1, 0, 0], [1, 3, 0, 0], [0, 0, 1, 0], [0, 0, 0, 5]]
    x = exact_solve(A, [1, 2, 3, 4])
    for r, rhs in zip(A, [1, 2, 3, 4]):
        assert sum((GaussRational(a) * v for a, v in zip(r, x)), ZERO) == GaussRational(rhs)
    with pytest.raises(SingularSystemError):
        exact_solve([[1, 2, 0, 0], [2, 4, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], [1, 1, 1, 1])
