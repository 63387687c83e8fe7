from __future__ import annotations

import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapscope.jacobi import (
    Model,
    TransferMatrix,
    VectorError,
    concatenate,
    cyclic_shift,
    discriminant,
    discriminant_and_derivative,
    is_irreducible,
    make_vector,
    monodromy_numeric,
    monodromy_poly,
    monodromy_product,
    scale_offdiag,
    shift_potential,
    transfer_matrix,
    vector_from_dict,
    vector_from_json,
    vector_to_json,
)
from gapscope.poly import Backend, Polynomial

F = Fraction


def exact(model, a=None, v=None):
    conv = (lambda xs: None if xs is None else [F(x) for x in xs])
    return make_vector(model, conv(a), conv(v), Backend.EXACT)


# --- vectors ----------------------------------------------------------------

def test_make_vector_examples():
    c = make_vector("dso", v=[0, 5, 0, -5])
    assert c.p == 4 and c.a == (1.0,) * 4
    o = exact("odjm", a=[1, 2, 2, 1])
    assert o.a[0] * o.a[2] == o.a[1] * o.a[3] and o.v == (0,) * 4
    with pytest.raises(VectorError):
        make_vector("odjm", a=[1, 0, 2])


def test_make_vector_rejects_bad_input():
    with pytest.raises(VectorError):
        make_vector("jac", a=[1, 2], v=[0])
    with pytest.raises(VectorError):
        make_vector("dso", a=[1, 2], v=[0, 0])
    with pytest.raises(VectorError):
        make_vector("odjm", a=[1, 2], v=[0, 1])


def test_cyclic_shift_examples():
    assert cyclic_shift(make_vector("dso", v=[0, 5, 0, -5])).v == (5, 0, -5, 0)
    c = make_vector("jac", a=[1, 2, 3, 4], v=[4, 3, 2, 1])
    assert cyclic_shift(c, 4) == c
    assert cyclic_shift(make_vector("odjm", a=[1, 2, 2, 1])).a == (2, 2, 1, 1)


def test_irreducibility_examples():
    assert not is_irreducible(make_vector("dso", v=[1, 2, 1, 2]))
    assert is_irreducible(make_vector("dso", v=[0, 5, 0, -5]))
    assert not is_irreducible(make_vector("dso", v=[3, 3, 3]))
    assert is_irreducible(make_vector("dso", v=[3]))


def test_irreducibility_is_bitwise_on_float():
    assert is_irreducible(make_vector("dso", v=[1.0, 1.0 + 2.0**-52]))


def test_shift_and_scale_examples():
    lam = F(3)
    c = exact("dso", v=[0, lam, 0, -lam])
    assert shift_potential(c, 1).v == (1, lam + 1, 1, 1 - lam)
    assert shift_potential(shift_potential(c, F(5, 2)), F(-5, 2)) == c
    s = scale_offdiag(exact("odjm", a=[1, 1, 1]), 2)
    assert s.a == (2, 2, 2)
    assert scale_offdiag(exact("dso", v=[0, 1]), 2).model is Model.JAC
    with pytest.raises(VectorError):
        scale_offdiag(c, 0)


def test_json_roundtrip():
    for c in (exact("jac", a=[1, F(2, 3)], v=[F(-1, 5), 7]),
              make_vector("odjm", a=[0.1, math.sqrt(2), 3.0])):
        assert vector_from_json(vector_to_json(c)) == c


def test_exact_json_rejects_float_literals():
    with pytest.raises(VectorError):
        vector_from_dict({"model": "dso", "v": [0.5, 1], "backend": "exact"})


# --- transfer matrices ------------------------------------------------------

def test_transfer_matrix_examples():
    t = F(3, 4)
    assert transfer_matrix(1, t).as_rows() == [[t, -1], [1, 0]]
    minus_one = TransferMatrix(F(-1), F(0), F(0), F(-1))
    assert transfer_matrix(F(1), F(0)) ** 2 == minus_one
    assert transfer_matrix(F(1), F(1)) ** 3 == minus_one
    m = transfer_matrix(1 / math.sqrt(2), 1.0) ** 4
    assert m.max_dev_from_scalar(-1) <= 1e-12


def test_transfer_matrix_rejects_nonpositive_s():
    with pytest.raises(ValueError):
        transfer_matrix(0, 1)


def test_monodromy_numeric_examples():
    assert monodromy_numeric(exact("dso", v=[0, 0]), F(0)).as_rows() == [[-1, 0], [0, -1]]
    assert monodromy_numeric(exact("dso", v=[0]), F(2)).as_rows() == [[2, -1], [1, 0]]
    rng = random.Random(3)
    v1, v2 = F(2, 3), F(-7, 5)
    c = exact("dso", v=[v1, v2])
    for _ in range(10):
        E = F(rng.randint(-50, 50), 7)
        m = monodromy_numeric(c, E)
        assert m.m11 == (E - v1) * (E - v2) - 1
        assert m.m12 == -(E - v2) and m.m21 == E - v1 and m.m22 == -1


def test_monodromy_poly_examples():
    v1, v2 = F(1, 2), F(3)
    P = monodromy_poly(exact("dso", v=[v1, v2]))
    E = Polynomial.x()
    assert P.p21 == E - Polynomial.constant(v1)
    assert P.p12 == -(E - Polynomial.constant(v2))
    a1, a2 = F(2), F(5, 3)
    Q = monodromy_poly(exact("odjm", a=[a1, a2]))
    assert Q.p11 == E * E - Polynomial.constant(a1 * a1)
    assert Q.p12 == -E
    assert Q.p21 == E.scale(a2 * a2)
    assert Q.p22 == Polynomial.constant(-a2 * a2)


def test_discriminant_examples():
    assert discriminant(exact("dso", v=[0, 0])).poly == Polynomial([F(-2), F(0), F(1)])
    assert discriminant(exact("dso", v=[0, 2])).poly == Polynomial([F(-2), F(-2), F(1)])
    assert discriminant(exact("dso", v=[0])).poly == Polynomial.x()


def test_concatenation_is_antihomomorphism():
    c = exact("jac", a=[1, 2], v=[0, F(1, 3)])
    d = exact("jac", a=[F(1, 2), 3, 1], v=[5, -1, 2])
    E = F(2, 7)
    assert monodromy_numeric(concatenate(c, d), E) == monodromy_numeric(d, E) @ monodromy_numeric(c, E)


def test_stable_derivative_matches_finite_difference():
    c = make_vector("jac", a=[0.7, 1.3, 2.0, 0.5], v=[0.1, -1.0, 2.0, 0.3])
    E, h = 0.37, 1e-6
    D, dD = discriminant_and_derivative(c, E)
    fd = (discriminant_and_derivative(c, E + h)[0] - discriminant_and_derivative(c, E - h)[0]) / (2 * h)
    assert abs(D - sum(monodromy_product(c, E)[i] for i in (0, 3))) <= 1e-12
    assert abs(dD - fd) <= 1e-6 * max(1.0, abs(dD))


# --- properties -------------------------------------------------------------

rat = st.fractions(min_value=-3, max_value=3, max_denominator=9)
pos = st.fractions(min_value=F(1, 4), max_value=4, max_denominator=9)


@st.composite
def exact_vectors(draw, model=None, max_p=8):
    model = draw(st.sampled_from(list(Model))) if model is None else model
    p = draw(st.integers(1, max_p))
    a = None if model is Model.DSO else draw(st.lists(pos, min_size=p, max_size=p))
    v = None if model is Model.ODJM else draw(st.lists(rat, min_size=p, max_size=p))
    return make_vector(model, a, v, Backend.EXACT)


@settings(max_examples=50, deadline=None)
@given(exact_vectors())
def test_det_is_s_squared_and_trace_monic(c):
    P = monodromy_poly(c)
    assert (P.p11 * P.p22 - P.p12 * P.p21) == Polynomial.constant(P.s * P.s)
    tr = P.p11 + P.p22
    assert tr.degree == c.p and tr.leading == 1
    assert tr.coeff(c.p - 1) == -sum(c.v)
    D = discriminant(c)
    assert D.poly.leading == 1 / D.s


@settings(max_examples=40, deadline=None)
@given(exact_vectors())
def test_poly_matches_numeric_product(c):
    P = monodromy_poly(c)
    rng = np.random.default_rng(c.p)
    cf = c.to_float()
    for E in rng.uniform(-4, 4, 20):
        m = monodromy_product(cf, float(E))
        for got, want in zip((P.p11, P.p12, P.p21, P.p22), m):
            val = float(got(F(float(E)))) / float(P.s)
            assert abs(val - want) <= 1e-10 * max(1.0, abs(want))


@settings(max_examples=40, deadline=None)
@given(exact_vectors(), st.integers(0, 10))
def test_cyclic_invariance_of_discriminant(c, k):
    assert discriminant(cyclic_shift(c, k)).poly == discriminant(c).poly


@settings(max_examples=40, deadline=None)
@given(exact_vectors(Model.DSO), rat)
def test_dso_shift_covariance(c, cst):
    D0 = discriminant(c).poly
    D1 = discriminant(shift_potential(c, cst)).poly
    rng = random.Random(len(c.v))
    for _ in range(20):
        E = F(rng.randint(-100, 100), 13)
        assert D1(E + cst) == D0(E)


@settings(max_examples=40, deadline=None)
@given(exact_vectors(Model.ODJM), pos)
def test_odjm_scale_covariance_and_reflection(c, cst):
    D0 = discriminant(c).poly
    D1 = discriminant(scale_offdiag(c, cst)).poly
    rng = random.Random(len(c.a))
    for _ in range(20):
        E = F(rng.randint(-100, 100), 13)
        assert D1(cst * E) == D0(E)
    refl = Polynomial([(-1) ** k * x for k, x in enumerate(D0.coeffs)])
    assert refl == D0.scale((-1) ** c.p)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 20), st.floats(-20, 20))
def test_transfer_det_is_one(s, t):
    assert abs(transfer_matrix(s, t).det() - 1) <= 1e-12 * (1 + t * t / (s * s) + s * s)
