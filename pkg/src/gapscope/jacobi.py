"""Periodic Jacobi coefficient vectors, transfer matrices and the discriminant.

A period-p Jacobi operator acts by ``(J psi)(n) = a(n-1) psi(n-1) + v(n) psi(n)
+ a(n) psi(n+1)`` with p-periodic a > 0 and real v.  The one-step transfer
matrix is ``B(s, t) = (1/s) [[t, -1], [s^2, 0]]`` and the monodromy over one
period is ``Phi(E) = B(a_p, E - v_p) ... B(a_1, E - v_1)``.  Its trace is the
discriminant D(E); the spectrum is where ``-2 <= D <= 2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .poly import Backend, Polynomial, Scalar, coerce, to_fraction


class Model(str, Enum):
    JAC = "jac"
    DSO = "dso"
    ODJM = "odjm"

    @classmethod
    def parse(cls, value) -> "Model":
        if isinstance(value, Model):
            return value
        return cls(str(value).strip().lower())


class VectorError(ValueError):
    pass


def _exact_zero(backend: Backend) -> Scalar:
    return Fraction(0) if backend is Backend.EXACT else 0.0


def _exact_one(backend: Backend) -> Scalar:
    return Fraction(1) if backend is Backend.EXACT else 1.0


@dataclass(frozen=True)
class CoefficientVector:
    """Validated coefficient pair (a, v) of one period, with its backend."""

    model: Model
    a: tuple
    v: tuple
    backend: Backend

    @property
    def p(self) -> int:
        return len(self.v)

    def __post_init__(self):
        if len(self.a) != len(self.v):
            raise VectorError(f"length mismatch: len(a)={len(self.a)} len(v)={len(self.v)}")
        if not self.v:
            raise VectorError("period must be at least 1")
        for x in self.a:
            if not x > 0:
                raise VectorError(f"off-diagonal entries must be positive, got {x}")
        if self.model is Model.DSO and any(x != 1 for x in self.a):
            raise VectorError("dso vectors need a = 1")
        if self.model is Model.ODJM and any(x != 0 for x in self.v):
            raise VectorError("odjm vectors need v = 0")

    def to_backend(self, backend: Backend | str) -> "CoefficientVector":
        backend = Backend(backend)
        if backend is self.backend:
            return self
        return CoefficientVector(
            self.model,
            tuple(coerce(x, backend) for x in self.a),
            tuple(coerce(x, backend) for x in self.v),
            backend,
        )

    def to_float(self) -> "CoefficientVector":
        return self.to_backend(Backend.FLOAT)

    def __str__(self) -> str:
        fmt = lambda xs: "(" + ", ".join(str(x) for x in xs) + ")"
        if self.model is Model.DSO:
            return f"dso v={fmt(self.v)}"
        if self.model is Model.ODJM:
            return f"odjm a={fmt(self.a)}"
        return f"jac a={fmt(self.a)} v={fmt(self.v)}"


def make_vector(model, a: Sequence | None = None, v: Sequence | None = None,
                backend: Backend | str = Backend.FLOAT) -> CoefficientVector:
    """Build a validated vector; DSO defaults a to ones, ODJM defaults v to zeros."""
    model = Model.parse(model)
    backend = Backend(backend)
    try:
        a_ = None if a is None else tuple(coerce(x, backend) for x in a)
        v_ = None if v is None else tuple(coerce(x, backend) for x in v)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise VectorError(f"unparseable coefficient: {exc}") from None
    if model is Model.DSO:
        if v_ is None:
            raise VectorError("dso vector needs v")
        if a_ is None:
            a_ = (_exact_one(backend),) * len(v_)
    elif model is Model.ODJM:
        if a_ is None:
            raise VectorError("odjm vector needs a")
        if v_ is None:
            v_ = (_exact_zero(backend),) * len(a_)
    else:
        if a_ is None or v_ is None:
            raise VectorError("jac vector needs both a and v")
    return CoefficientVector(model, a_, v_, backend)


def _derive_model(prev: Model, a: tuple, v: tuple) -> Model:
    dso_ok = all(x == 1 for x in a)
    odjm_ok = all(x == 0 for x in v)
    if prev is Model.DSO and dso_ok:
        return prev
    if prev is Model.ODJM and odjm_ok:
        return prev
    if dso_ok:
        return Model.DSO
    if odjm_ok:
        return Model.ODJM
    return Model.JAC


def cyclic_shift(c: CoefficientVector, k: int = 1) -> CoefficientVector:
    """Rotate a and v left by k: cyc(v) = (v_2, ..., v_p, v_1)."""
    k %= c.p
    return CoefficientVector(c.model, c.a[k:] + c.a[:k], c.v[k:] + c.v[:k], c.backend)


def is_irreducible(c: CoefficientVector) -> bool:
    """True iff the p cyclic shifts of (a, v) are pairwise distinct.

    Float entries are compared bitwise; no tolerance is applied.
    """
    pairs = list(zip(c.a, c.v))
    p = len(pairs)
    # the shifts are distinct iff no proper rotation fixes the sequence
    for d in range(1, p):
        if p % d == 0 and all(pairs[i] == pairs[(i + d) % p] for i in range(p)):
            return False
    return True


def shift_potential(c: CoefficientVector, cst) -> CoefficientVector:
    cst = coerce(cst, c.backend)
    v = tuple(x + cst for x in c.v)
    return CoefficientVector(_derive_model(c.model, c.a, v), c.a, v, c.backend)


def scale_offdiag(c: CoefficientVector, cst) -> CoefficientVector:
    cst = coerce(cst, c.backend)
    if not cst > 0:
        raise VectorError(f"scale factor must be positive, got {cst}")
    a = tuple(cst * x for x in c.a)
    return CoefficientVector(_derive_model(c.model, a, c.v), a, c.v, c.backend)


def concatenate(c: CoefficientVector, d: CoefficientVector) -> CoefficientVector:
    """Free-monoid concatenation (a, v)(a', v'); backends must agree."""
    if c.backend is not d.backend:
        raise VectorError("backend mismatch")
    a, v = c.a + d.a, c.v + d.v
    prev = c.model if c.model is d.model else Model.JAC
    return CoefficientVector(_derive_model(prev, a, v), a, v, c.backend)


# ---------------------------------------------------------------------------
# 2x2 transfer matrices

@dataclass(frozen=True)
class TransferMatrix:
    m11: Scalar
    m12: Scalar
    m21: Scalar
    m22: Scalar

    def __matmul__(self, o: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )

    def __pow__(self, n: int) -> "TransferMatrix":
        if n < 0:
            return self.inverse() ** (-n)
        one, zero = (Fraction(1), Fraction(0)) if isinstance(self.m11, Fraction) else (1.0, 0.0)
        out = TransferMatrix(one, zero, zero, one)
        for _ in range(n):
            out = self @ out
        return out

    def det(self) -> Scalar:
        return self.m11 * self.m22 - self.m12 * self.m21

    def trace(self) -> Scalar:
        return self.m11 + self.m22

    def inverse(self) -> "TransferMatrix":
        d = self.det()
        return TransferMatrix(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d)

    def scaled(self, c) -> "TransferMatrix":
        return TransferMatrix(c * self.m11, c * self.m12, c * self.m21, c * self.m22)

    def entries(self) -> tuple:
        return (self.m11, self.m12, self.m21, self.m22)

    def max_dev_from_scalar(self, sigma: int) -> float:
        """max-norm distance to sigma times the identity."""
        return max(abs(float(self.m11 - sigma)), abs(float(self.m12)),
                   abs(float(self.m21)), abs(float(self.m22 - sigma)))

    def as_rows(self) -> list[list[Scalar]]:
        return [[self.m11, self.m12], [self.m21, self.m22]]


def transfer_matrix(s, t) -> TransferMatrix:
    """B(s, t) = (1/s) [[t, -1], [s^2, 0]], defined for s > 0."""
    if not s > 0:
        raise VectorError(f"transfer matrix needs s > 0, got {s}")
    if isinstance(s, float) or isinstance(t, float):
        s, t = float(s), float(t)
        return TransferMatrix(t / s, -1.0 / s, s, 0.0)
    s, t = to_fraction(s), to_fraction(t)
    return TransferMatrix(t / s, -1 / s, s, Fraction(0))


def monodromy_numeric(c: CoefficientVector, E) -> TransferMatrix:
    """Phi(E) = B(a_p, E - v_p) ... B(a_1, E - v_1), evaluated on c's backend."""
    E = coerce(E, c.backend)
    out = transfer_matrix(c.a[0], E - c.v[0])
    for aj, vj in zip(c.a[1:], c.v[1:]):
        out = transfer_matrix(aj, E - vj) @ out
    return out


def monodromy_product(c: CoefficientVector, E: float) -> tuple[float, float, float, float]:
    """Float-only unrolled product; the hot path of the spectral code."""
    m11, m12, m21, m22 = 1.0, 0.0, 0.0, 1.0
    for s, vj in zip(c.a, c.v):
        t = E - vj
        inv = 1.0 / s
        # B @ M with B = [[t/s, -1/s], [s, 0]]
        m11, m12, m21, m22 = ((t * m11 - m21) * inv, (t * m12 - m22) * inv, s * m11, s * m12)
    return m11, m12, m21, m22


def discriminant_and_derivative(c: CoefficientVector, E: float) -> tuple[float, float]:
    """D(E) and D'(E) via the transfer product and its product-rule derivative."""
    m11, m12, m21, m22 = 1.0, 0.0, 0.0, 1.0
    d11 = d12 = d21 = d22 = 0.0
    for s, vj in zip(c.a, c.v):
        t = E - vj
        inv = 1.0 / s
        # d(B M) = B' M + B dM with B' = [[1/s, 0], [0, 0]]
        d11, d12, d21, d22 = ((m11 + t * d11 - d21) * inv, (m12 + t * d12 - d22) * inv, s * d11, s * d12)
        m11, m12, m21, m22 = ((t * m11 - m21) * inv, (t * m12 - m22) * inv, s * m11, s * m12)
    return m11 + m22, d11 + d22


# ---------------------------------------------------------------------------
# polynomial monodromy

@dataclass(frozen=True)
class MonodromyPoly:
    """P(E) = s * Phi(E) with s = prod(a); entries are polynomials in E."""

    p11: Polynomial
    p12: Polynomial
    p21: Polynomial
    p22: Polynomial
    s: Scalar

    def __call__(self, E) -> TransferMatrix:
        inv = 1 / self.s
        return TransferMatrix(self.p11(E) * inv, self.p12(E) * inv, self.p21(E) * inv, self.p22(E) * inv)

    def trace(self) -> Polynomial:
        return self.p11 + self.p22

    def det(self) -> Polynomial:
        return self.p11 * self.p22 - self.p12 * self.p21


def monodromy_poly(c: CoefficientVector) -> MonodromyPoly:
    """Polynomial lift of the monodromy from products of s_j * B(a_j, E - v_j)."""
    bk = c.backend
    one = Polynomial.constant(1, bk)
    zero = Polynomial((), bk)
    P = [one, zero, zero, one]
    s = _exact_one(bk)
    for aj, vj in zip(c.a, c.v):
        t = Polynomial((-vj, 1), bk)
        sq = Polynomial.constant(aj * aj, bk)
        # [[t, -1], [a^2, 0]] @ P
        P = [t * P[0] - P[2], t * P[1] - P[3], sq * P[0], sq * P[1]]
        s = s * aj
    return MonodromyPoly(P[0], P[1], P[2], P[3], s)


@dataclass(frozen=True)
class Discriminant:
    poly: Polynomial
    s: Scalar

    def __call__(self, E):
        return self.poly(E)


def discriminant(c: CoefficientVector) -> Discriminant:
    mp = monodromy_poly(c)
    return Discriminant(mp.trace().scale(1 / mp.s), mp.s)


# ---------------------------------------------------------------------------
# JSON

def scalar_to_json(x):
    if isinstance(x, Fraction):
        return str(x)
    return float(x)


def vector_to_dict(c: CoefficientVector) -> dict:
    return {
        "model": c.model.value,
        "a": [scalar_to_json(x) for x in c.a],
        "v": [scalar_to_json(x) for x in c.v],
        "backend": c.backend.value,
    }


def vector_from_dict(d: dict) -> CoefficientVector:
    try:
        model = Model.parse(d["model"])
        backend = Backend(d.get("backend", "float"))
    except (KeyError, ValueError) as exc:
        raise VectorError(f"bad vector JSON: {exc}") from None
    if backend is Backend.EXACT:
        for x in list(d.get("a") or []) + list(d.get("v") or []):
            if isinstance(x, float):
                raise VectorError("exact vectors serialise scalars as 'num/den' strings")
    return make_vector(model, d.get("a"), d.get("v"), backend)


def vector_to_json(c: CoefficientVector) -> str:
    return json.dumps(vector_to_dict(c))


def vector_from_json(text: str) -> CoefficientVector:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise VectorError(f"bad vector JSON: {exc}") from None
    return vector_from_dict(d)


def is_finite_vector(c: CoefficientVector) -> bool:
    return all(math.isfinite(float(x)) for x in c.a + c.v)
