from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from einmax import reference_values as ref
from einmax.errors import ConfigError, SearchExhausted, SingularSystemError
from einmax.symbols import check_gauge, independence_determinant
from einmax.tensor import Covector4, GaussRational, minkowski_pairing
from einmax.variety import (
    SamplingBox,
    exact_rank,
    gauge_basis,
    lightlike_from_params,
    reference_box,
    sample_lightlike,
    search_nondegenerate,
    solve_alphas,
)

import oracles


def ints(v):
    return tuple(int(c.re) for c in v)


def test_sample_lightlike_examples():
    assert ints(sample_lightlike(0)) == (1, 1, 0, 0)
    assert ints(sample_lightlike(13591)) == (5, 3, 4, 0)
    assert ints(sample_lightlike(12534)) == (13, 3, 4, 12)
    assert ints(lightlike_from_params("1/2", 0)) == (5, 3, 4, 0)
    assert ints(lightlike_from_params("1/4", "3/4")) == (13, 3, 4, 12)


@given(st.integers(min_value=0, max_value=10**6))
def test_sampled_covectors_are_future_null_and_deterministic(seed):
    z = sample_lightlike(seed)
    assert minkowski_pairing(z, z) == 0
    assert z[0].re > 0
    assert z == sample_lightlike(seed)


def test_gauge_basis_examples():
    assert [ints(b) for b in gauge_basis((1, 0, 0, 1))] == [(1, 0, 0, 1), (0, 1, 0, 0), (0, 0, 1, 0)]
    basis = gauge_basis(("-3/4", "-3/4", 0, 0))
    z3 = Covector4(("-3/4", "-3/4", 0, 0))
    assert basis[0] == z3
    # (1, 1, 0, 0) lies in the span; (1, -1, 0, 0) does not solve the gauge condition
    assert exact_rank([*basis, Covector4((1, 1, 0, 0))]) == 3
    assert not check_gauge(z3, Covector4((1, -1, 0, 0)))
    with pytest.raises(ConfigError):
        gauge_basis((0, 0, 0, 0))
    with pytest.raises(ConfigError):
        gauge_basis((1, 0, 0, 0))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_gauge_basis_spans_solution_space(seed):
    z = sample_lightlike(seed)
    basis = gauge_basis(z)
    assert z in basis
    assert exact_rank(basis) == 3
    assert all(check_gauge(z, b) for b in basis)


def test_solve_alphas_examples():
    xis = [z * GaussRational(1 / a) for z, a in zip(ref.zetas(), ref.as_rationals(ref.ALPHAS))]
    alphas = solve_alphas(ref.TOTAL_COVECTOR, xis)
    assert alphas == (1, 1, Fraction(-3, 4), 1)
    zs = ref.zetas()
    total = zs[0] + zs[1] + zs[2] + zs[3]
    assert solve_alphas(total, zs) == (1, 1, 1, 1)
    with pytest.raises(SingularSystemError):
        solve_alphas(total, [zs[0], zs[0], zs[2], zs[3]])


def test_reference_pols_succeed_immediately():
    target, box = reference_box(with_reference_pols=True)
    point = search_nondegenerate(target, box, seed=7)
    assert point.iteration == 0
    assert point.alphas == (1, 1, Fraction(-3, 4), 1)
    want = [[oracles.num(Fraction(c)) for c in ref.T_VECTORS[a]] for a in range(1, 6)]
    assert [[oracles.num(c) for c in v] for v in point.t_vectors] == want
    assert not point.determinant.is_zero()


def check_point(point):
    total = point.xis[0] * point.alphas[0]
    for x, a in zip(point.xis[1:], point.alphas[1:]):
        total = total + x * a
    assert total == point.target
    for x in point.xis:
        assert minkowski_pairing(x, x) == 0 and x[0].re > 0
    for pols in point.pol_sets:
        assert all(check_gauge(x, p) for x, p in zip(point.xis, pols))
    rows = [[oracles.num(c) for c in v] for v in point.t_vectors]
    want = oracles.cofactor_det(rows)
    assert want == oracles.num(point.determinant)
    assert want != 0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_search_verified_by_determinant_oracle(seed):
    target, box = reference_box()
    check_point(search_nondegenerate(target, box, seed=seed))


def test_wide_box_search():
    target, box = reference_box(radius="1/2")
    check_point(search_nondegenerate(target, box, seed=11))


def test_search_is_deterministic():
    target, box = reference_box()
    a = search_nondegenerate(target, box, seed=5)
    b = search_nondegenerate(target, box, seed=5)
    assert a.to_json() == b.to_json()
    c = search_nondegenerate(target, box, seed=6)
    assert a.to_json() != c.to_json()


def test_identical_pol_sets_exhaust():
    target, box = reference_box()
    box.identical_pol_sets = True
    with pytest.raises(SearchExhausted) as info:
        search_nondegenerate(target, box, seed=0, max_iter=3)
    assert info.value.best is not None
    assert info.value.best_det == 0
    assert "rank 1" in str(info.value)


def test_bad_inputs():
    _, box = reference_box()
    with pytest.raises(ConfigError):
        search_nondegenerate((1, 0, 0, 0), box)
    with pytest.raises(ConfigError):
        SamplingBox(((1, 0, 0, 0),) * 4)


def test_determinant_of_reference_t_vectors():
    rows = [[Fraction(c) for c in ref.T_VECTORS[a]] for a in range(1, 6)]
    got = independence_determinant([[GaussRational(str(c)) for c in r] for r in rows])
    assert oracles.num(got) == oracles.cofactor_det(rows)
    assert oracles.cofactor_det(rows) != 0
