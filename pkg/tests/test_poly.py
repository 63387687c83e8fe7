from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapscope.poly import (
    Backend,
    BackendError,
    Polynomial,
    PolynomialError,
    RootBracket,
    RootOnEndpoint,
    gcd_many,
    isolate_real_roots,
    narrow_bracket,
    poly_arith,
    poly_gcd,
    rational_root_in,
    refine_root,
    squarefree_decomposition,
    squarefree_part,
    sturm_count,
)

F = Fraction
E = Polynomial.x()


def P(*coeffs, backend=Backend.EXACT):
    return Polynomial([F(c) if backend is Backend.EXACT else float(c) for c in coeffs], backend)


# --- arithmetic -------------------------------------------------------------

def test_difference_of_squares():
    assert poly_arith(E - P(1), E + P(1), "mul") == P(-1, 0, 1)


def test_cancellation_collapses_degree():
    q = poly_arith(P(1, 0, 1), P(0, 0, -1), "add")
    assert q == P(1) and q.degree == 0


def test_p2_monodromy_entry_from_factors():
    v1, v2 = F(3, 7), F(-2)
    entry = (E - P(v1)) * (E - P(v2)) - P(1)
    for x in (F(0), F(1, 3), F(5)):
        assert entry(x) == (x - v1) * (x - v2) - 1


def test_zero_polynomial_is_canonical():
    assert P(0, 0, 0).is_zero() and P(0, 0, 0).degree == -1
    assert P() == P(0)


def test_float_trailing_coefficients_only_stripped_when_exactly_zero():
    q = Polynomial([1.0, 2.0, 1e-300], Backend.FLOAT)
    assert q.degree == 2
    assert Polynomial([1.0, 0.0], Backend.FLOAT).degree == 0


def test_backend_mismatch_raises():
    with pytest.raises(BackendError):
        P(1, 1) + P(1, 1, backend=Backend.FLOAT)


def test_float_coefficients_must_be_finite():
    with pytest.raises(PolynomialError):
        Polynomial([1.0, math.nan], Backend.FLOAT)


def test_scale_op():
    assert poly_arith(P(1, 2), F(3), "scale") == P(3, 6)


# --- gcd --------------------------------------------------------------------

@pytest.mark.parametrize("p, q, g", [
    (P(-1, 0, 1), P(-1, 1), P(-1, 1)),
    (P(-2, 0, 1), P(1, 0, 1), P(1)),
    (P(0, -1, 0, 1), P(-1, 0, 1), P(-1, 0, 1)),
])
def test_gcd_examples(p, q, g):
    assert poly_gcd(p, q) == g


def test_gcd_float_backend_refused():
    with pytest.raises(BackendError):
        poly_gcd(P(1, 1, backend=Backend.FLOAT), P(1, 1, backend=Backend.FLOAT))


def test_gcd_both_zero_refused():
    with pytest.raises(PolynomialError):
        poly_gcd(P(0), P(0))


def test_gcd_many_is_monic():
    g = gcd_many([P(-2, 0, 2), P(-4, 4), P(0, -3, 0, 3)])
    assert g == P(-1, 1)


# --- Sturm counts -----------------------------------------------------------

@pytest.mark.parametrize("p, lo, hi, n", [
    (P(-2, 0, 1), 0, 2, 1),
    (P(-2, 0, 1), -2, 2, 2),
    (P(1, -2, 1), 0, 2, 1),
])
def test_sturm_count_examples(p, lo, hi, n):
    assert sturm_count(p, lo, hi) == n


def test_sturm_count_endpoint_root_raises():
    with pytest.raises(RootOnEndpoint):
        sturm_count(P(-1, 1), 0, 1)


# --- isolation and refinement ----------------------------------------------

def test_isolate_sqrt2():
    brs = isolate_real_roots(P(-2, 0, 1))
    assert len(brs) == 2
    assert brs[0].lo < -math.sqrt(2) <= brs[0].hi
    assert brs[1].lo < math.sqrt(2) <= brs[1].hi


@pytest.mark.parametrize("backend", [Backend.EXACT, Backend.FLOAT])
def test_isolate_discriminant_minus_two(backend):
    # D - 2 for the period-2 potential (0, 2)
    brs = isolate_real_roots(P(-4, -2, 1, backend=backend))
    roots = [1 - math.sqrt(5), 1 + math.sqrt(5)]
    assert len(brs) == 2
    for br, r in zip(brs, roots):
        assert float(br.lo) <= r <= float(br.hi)


def test_isolate_constant_is_empty():
    assert isolate_real_roots(P(7)) == []


def test_isolate_zero_polynomial_raises():
    with pytest.raises(PolynomialError):
        isolate_real_roots(P(0))


def test_refine_examples():
    assert abs(refine_root(P(-2, 0, 1), RootBracket(F(1), F(2)), 1e-12) - math.sqrt(2)) <= 1e-12
    assert refine_root(P(-3, 1), RootBracket(F(2), F(4)), 1e-12) == 3
    r = refine_root(P(-1, -1, 0, 1), RootBracket(F(1), F(2)), 1e-10)
    assert abs(r - 1.324717957244746) <= 1e-10


def test_refine_float_backend():
    r = refine_root(P(-2, 0, 1, backend=Backend.FLOAT), RootBracket(1.0, 2.0), 1e-12)
    assert abs(r - math.sqrt(2)) <= 1e-12


def test_refine_rejects_non_isolating_bracket():
    with pytest.raises(PolynomialError):
        refine_root(P(-2, 0, 1), RootBracket(F(-2), F(2), 2), 1e-12)


def test_float_isolation_handles_tangency():
    q = Polynomial.from_roots([1.0, 1.0, -1.0], Backend.FLOAT)
    brs = isolate_real_roots(q)
    assert len(brs) == 2
    assert any(abs(float(b.lo) - 1) < 1e-9 or float(b.lo) <= 1 <= float(b.hi) for b in brs)


def test_rational_root_detection():
    q = P(-3, 2) * P(-2, 0, 1)  # roots 3/2, +-sqrt 2
    found = [rational_root_in(q, br) for br in isolate_real_roots(q)]
    assert found.count(None) == 2 and F(3, 2) in found


def test_narrow_bracket_keeps_root():
    br = narrow_bracket(P(-2, 0, 1), RootBracket(F(1), F(2)), F(1, 10**6))
    assert br.hi - br.lo <= F(1, 10**6)
    assert br.lo ** 2 < 2 <= br.hi ** 2


def test_squarefree_decomposition_example():
    q = Polynomial.from_roots([F(1), F(1), F(2), F(3), F(3), F(3)])
    parts = dict((m, f) for f, m in squarefree_decomposition(q))
    assert parts[1] == P(-2, 1)
    assert parts[2] == P(-1, 1)
    assert parts[3] == P(-3, 1)
    assert squarefree_part(q) == Polynomial.from_roots([F(1), F(2), F(3)])


# --- properties -------------------------------------------------------------

small_rat = st.fractions(min_value=-5, max_value=5, max_denominator=7)
rat_poly = st.lists(small_rat, min_size=1, max_size=6).map(Polynomial)


@settings(max_examples=60, deadline=None)
@given(rat_poly, rat_poly, rat_poly)
def test_ring_axioms(p, q, r):
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p + q == q + p


@settings(max_examples=60, deadline=None)
@given(rat_poly, rat_poly)
def test_divmod_identity(p, q):
    if q.is_zero():
        return
    quo, rem = p.divmod(q)
    assert quo * q + rem == p
    assert rem.degree < q.degree


@settings(max_examples=60, deadline=None)
@given(rat_poly, rat_poly)
def test_gcd_divides_both(p, q):
    if p.is_zero() and q.is_zero():
        return
    g = poly_gcd(p, q)
    assert (p % g).is_zero() and (q % g).is_zero()
    assert g.leading == 1


int_roots = st.lists(st.integers(-4, 4), min_size=1, max_size=6)


@settings(max_examples=80, deadline=None)
@given(int_roots, st.integers(-5, 4), st.integers(1, 6))
def test_sturm_count_matches_known_roots(roots, lo, width):
    hi = lo + width
    q = Polynomial.from_roots([F(r) for r in roots])
    # half-integer endpoints never hit an integer root
    a, b = F(2 * lo + 1, 2), F(2 * hi + 1, 2)
    assert sturm_count(q, a, b) == len({r for r in roots if a < r <= b})


@settings(max_examples=60, deadline=None)
@given(int_roots)
def test_isolation_and_refinement_recover_roots(roots):
    q = Polynomial.from_roots([F(r) for r in roots])
    distinct = sorted(set(roots))
    for backend in (Backend.EXACT, Backend.FLOAT):
        qq = q if backend is Backend.EXACT else q.to_float()
        brs = isolate_real_roots(qq)
        assert len(brs) == len(distinct)
        for br, r in zip(brs, distinct):
            assert abs(float(refine_root(qq, br, 1e-12)) - r) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(int_roots)
def test_squarefree_decomposition_reconstructs(roots):
    q = Polynomial.from_roots([F(r) for r in roots])
    prod = Polynomial.constant(F(1))
    for f, m in squarefree_decomposition(q):
        for _ in range(m):
            prod = prod * f
    assert prod.monic() == q.monic()
