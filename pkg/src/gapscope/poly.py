"""Dense univariate polynomials over exact rationals or binary64 floats.

Coefficients are stored low degree first.  The exact backend uses
:class:`fractions.Fraction`; the float backend stores finite Python floats.
Besides ring arithmetic this module provides the root machinery the spectral
code relies on: gcd (subresultant PRS), square-free decomposition, Sturm
sequences, real-root isolation and refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import reduce
from numbers import Rational
from typing import Iterable, Sequence, Union

from scipy.optimize import brentq

Scalar = Union[Fraction, float]


class Backend(str, Enum):
    EXACT = "exact"
    FLOAT = "float"


class PolynomialError(ValueError):
    pass


class BackendError(PolynomialError):
    """Operands live on different backends, or the backend is unsupported."""


class RootOnEndpoint(PolynomialError):
    pass


def to_fraction(x) -> Fraction:
    """Convert an int, Fraction, "num/den" string or float to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise PolynomialError(f"non-finite coefficient {x!r}")
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact scalar")


def to_float(x) -> float:
    if isinstance(x, str):
        x = Fraction(x.strip())
    f = float(x)
    if not math.isfinite(f):
        raise PolynomialError(f"non-finite coefficient {x!r}")
    return f


def coerce(x, backend: Backend) -> Scalar:
    return to_fraction(x) if Backend(backend) is Backend.EXACT else to_float(x)


class Polynomial:
    """Immutable dense polynomial; ``coeffs[i]`` multiplies ``E**i``."""

    __slots__ = ("_coeffs", "_backend")

    def __init__(self, coeffs: Iterable = (), backend: Backend | str = Backend.EXACT):
        backend = Backend(backend)
        cs = [coerce(c, backend) for c in coeffs]
        # exact zero test on both backends: never drop a float by tolerance
        while cs and cs[-1] == 0:
            cs.pop()
        self._coeffs = tuple(cs)
        self._backend = backend

    # -- construction helpers -------------------------------------------------

    @classmethod
    def x(cls, backend: Backend | str = Backend.EXACT) -> "Polynomial":
        return cls((0, 1), backend)

    @classmethod
    def constant(cls, c, backend: Backend | str = Backend.EXACT) -> "Polynomial":
        return cls((c,), backend)

    @classmethod
    def from_roots(cls, roots: Sequence, backend: Backend | str = Backend.EXACT) -> "Polynomial":
        out = cls.constant(1, backend)
        for r in roots:
            out = out * cls((-coerce(r, Backend(backend)), 1), backend)
        return out

    # -- basic properties -----------------------------------------------------

    @property
    def coeffs(self) -> tuple:
        return self._coeffs

    @property
    def backend(self) -> Backend:
        return self._backend

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self._coeffs) - 1

    def is_zero(self) -> bool:
        return not self._coeffs

    @property
    def leading(self) -> Scalar:
        if not self._coeffs:
            return self._zero()
        return self._coeffs[-1]

    def coeff(self, i: int) -> Scalar:
        return self._coeffs[i] if 0 <= i < len(self._coeffs) else self._zero()

    def _zero(self) -> Scalar:
        return Fraction(0) if self._backend is Backend.EXACT else 0.0

    def _like(self, coeffs) -> "Polynomial":
        return Polynomial(coeffs, self._backend)

    def _check(self, other: "Polynomial") -> None:
        if not isinstance(other, Polynomial):
            raise TypeError(f"expected Polynomial, got {type(other).__name__}")
        if other._backend is not self._backend:
            raise BackendError(f"backend mismatch: {self._backend.value} vs {other._backend.value}")

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        n = max(len(self._coeffs), len(other._coeffs))
        return self._like(self.coeff(i) + other.coeff(i) for i in range(n))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        n = max(len(self._coeffs), len(other._coeffs))
        return self._like(self.coeff(i) - other.coeff(i) for i in range(n))

    def __neg__(self) -> "Polynomial":
        return self._like(-c for c in self._coeffs)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        if self.is_zero() or other.is_zero():
            return self._like(())
        out = [self._zero()] * (len(self._coeffs) + len(other._coeffs) - 1)
        for i, a in enumerate(self._coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other._coeffs):
                out[i + j] += a * b
        return self._like(out)

    def scale(self, c) -> "Polynomial":
        c = coerce(c, self._backend)
        return self._like(c * a for a in self._coeffs)

    def shift_var(self, c) -> "Polynomial":
        """Return q with q(E) = self(E + c)."""
        c = coerce(c, self._backend)
        out = self._like(())
        lin = self._like((c, 1))
        for a in reversed(self._coeffs):
            out = out * lin + self._like((a,))
        return out

    def __call__(self, x):
        if self._backend is Backend.EXACT:
            x = to_fraction(x) if not isinstance(x, Fraction) else x
        else:
            x = float(x)
        acc = self._zero()
        for a in reversed(self._coeffs):
            acc = acc * x + a
        return acc

    def derivative(self) -> "Polynomial":
        return self._like(i * a for i, a in enumerate(self._coeffs) if i > 0)

    def divmod(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        self._check(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self._coeffs)
        dq = len(rem) - len(other._coeffs)
        if dq < 0:
            return self._like(()), self
        quot = [self._zero()] * (dq + 1)
        lead = other.leading
        m = len(other._coeffs)
        for k in range(dq, -1, -1):
            q = rem[k + m - 1] / lead
            quot[k] = q
            if q == 0:
                continue
            for j, b in enumerate(other._coeffs):
                rem[k + j] -= q * b
            rem[k + m - 1] = self._zero()
        return self._like(quot), self._like(rem[: m - 1])

    def __floordiv__(self, other: "Polynomial") -> "Polynomial":
        return self.divmod(other)[0]

    def __mod__(self, other: "Polynomial") -> "Polynomial":
        return self.divmod(other)[1]

    def monic(self) -> "Polynomial":
        if self.is_zero():
            return self
        return self.scale(1 / self.leading if self._backend is Backend.FLOAT else 1 / Fraction(self.leading))

    def to_float(self) -> "Polynomial":
        return Polynomial(self._coeffs, Backend.FLOAT)

    def to_exact(self) -> "Polynomial":
        return Polynomial(self._coeffs, Backend.EXACT)

    # -- dunder plumbing ------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._backend is other._backend and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash((self._backend, self._coeffs))

    def __repr__(self) -> str:
        return f"Polynomial({[str(c) for c in self._coeffs]!r}, {self._backend.value!r})"

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            c = self._coeffs[i]
            if c == 0:
                continue
            mono = "" if i == 0 else ("E" if i == 1 else f"E^{i}")
            if mono and c == 1:
                terms.append(f"+{mono}")
            elif mono and c == -1:
                terms.append(f"-{mono}")
            else:
                s = str(c)
                terms.append((s if s.startswith("-") else "+" + s) + ("*" + mono if mono else ""))
        out = "".join(terms)
        return out[1:] if out.startswith("+") else out


def poly_arith(p: Polynomial, q, op: str) -> Polynomial:
    """Apply ``op`` in {add, sub, mul, scale}; for ``scale`` q is a scalar."""
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    if op == "scale":
        return p.scale(q)
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# gcd over Q via the subresultant PRS on primitive integer polynomials

def _require_exact(*polys: Polynomial) -> None:
    for p in polys:
        if p.backend is not Backend.EXACT:
            raise BackendError("operation requires the exact backend; use the float detection path")


def _integer_primitive(p: Polynomial) -> list[int]:
    den = reduce(math.lcm, (c.denominator for c in p.coeffs), 1)
    ints = [int(c * den) for c in p.coeffs]
    g = reduce(math.gcd, ints, 0)
    return [c // g for c in ints]


def _int_content(a: list[int]) -> int:
    return reduce(math.gcd, a, 0)


def _int_prem(a: list[int], b: list[int]) -> list[int]:
    """Pseudo-remainder lc(b)**(deg a - deg b + 1) * a mod b, low-first lists."""
    r = list(a)
    db = len(b) - 1
    lb = b[-1]
    e = len(a) - len(b) + 1
    while len(r) - 1 >= db and r:
        lr = r[-1]
        shift = len(r) - 1 - db
        r = [lb * c for c in r]
        for j, c in enumerate(b):
            r[shift + j] -= lr * c
        r.pop()
        while r and r[-1] == 0:
            r.pop()
        e -= 1
    if e > 0:
        r = [c * lb**e for c in r]
    return r


def _subresultant_gcd(a: list[int], b: list[int]) -> list[int]:
    if len(a) < len(b):
        a, b = b, a
    ca, cb = _int_content(a), _int_content(b)
    d = math.gcd(ca, cb)
    a = [c // ca for c in a]
    b = [c // cb for c in b]
    g = h = 1
    while True:
        delta = len(a) - len(b)
        r = _int_prem(a, b)
        if not r:
            break
        if len(r) == 1:
            b = [1]
            break
        a = b
        denom = g * h**delta
        b = [c // denom for c in r]
        g = a[-1]
        if delta == 1:
            h = g
        elif delta > 1:
            h = g**delta // h ** (delta - 1)
    cbb = _int_content(b)
    b = [d * c // cbb for c in b]
    return b


def poly_gcd(p: Polynomial, q: Polynomial) -> Polynomial:
    """Monic gcd over the rationals (exact backend only)."""
    _require_exact(p, q)
    if p.is_zero() and q.is_zero():
        raise PolynomialError("gcd of two zero polynomials is undefined")
    if p.is_zero():
        return q.monic()
    if q.is_zero():
        return p.monic()
    if p.degree == 0 or q.degree == 0:
        return Polynomial((1,))
    g = _subresultant_gcd(_integer_primitive(p), _integer_primitive(q))
    return Polynomial(g).monic()


def gcd_many(polys: Iterable[Polynomial]) -> Polynomial:
    """Pairwise gcd of several polynomials, re-normalised monic at each step."""
    out = None
    for p in polys:
        if out is None:
            out = p
            continue
        if out.is_zero() and p.is_zero():
            continue
        out = poly_gcd(out, p)
        if out.degree == 0:
            return out
    if out is None or out.is_zero():
        raise PolynomialError("gcd of zero polynomials is undefined")
    return out.monic()


def squarefree_part(p: Polynomial) -> Polynomial:
    _require_exact(p)
    if p.degree <= 0:
        return p.monic() if not p.is_zero() else p
    g = poly_gcd(p, p.derivative())
    return (p // g).monic()


def squarefree_decomposition(p: Polynomial) -> list[tuple[Polynomial, int]]:
    """Yun's algorithm: monic square-free factors with their multiplicities."""
    _require_exact(p)
    if p.is_zero():
        raise PolynomialError("zero polynomial")
    if p.degree == 0:
        return []
    dp = p.derivative()
    a = poly_gcd(p, dp)
    b = p // a
    c = dp // a
    d = c - b.derivative()
    out = []
    i = 1
    while b.degree > 0:
        a = poly_gcd(b, d) if not d.is_zero() else b.monic()
        if a.degree > 0:
            out.append((a.monic(), i))
        b = b // a
        c = d // a
        d = c - b.derivative()
        i += 1
    return out


# ---------------------------------------------------------------------------
# Sturm sequences and exact isolation

@dataclass(frozen=True)
class RootBracket:
    lo: Scalar
    hi: Scalar
    count: int = 1

    def __post_init__(self):
        if not self.lo < self.hi:
            raise PolynomialError(f"bracket needs lo < hi, got ({self.lo}, {self.hi})")
        if self.count < 0:
            raise PolynomialError("negative root count")

    @property
    def width(self) -> Scalar:
        return self.hi - self.lo


def sturm_sequence(p: Polynomial) -> list[Polynomial]:
    """Canonical Sturm chain of the square-free part of ``p``."""
    _require_exact(p)
    if p.is_zero():
        raise PolynomialError("zero polynomial has no Sturm sequence")
    sf = squarefree_part(p)
    seq = [sf, sf.derivative()]
    while not seq[-1].is_zero():
        r = seq[-2] % seq[-1]
        if r.is_zero():
            break
        seq.append(-r)
    if seq[-1].is_zero():
        seq.pop()
    return seq


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def sign_variations(seq: Sequence[Polynomial], x) -> int:
    """Sign changes of the chain at ``x``; ``x`` may be +/- math.inf."""
    signs = []
    for q in seq:
        if x == math.inf:
            s = _sign(q.leading)
        elif x == -math.inf:
            s = _sign(q.leading) * (-1) ** q.degree
        else:
            s = _sign(q(x))
        if s:
            signs.append(s)
    return sum(1 for u, w in zip(signs, signs[1:]) if u != w)


def sturm_count(p: Polynomial, lo, hi) -> int:
    """Distinct real roots of ``p`` in (lo, hi]; endpoints must not be roots."""
    _require_exact(p)
    if p.is_zero():
        raise PolynomialError("zero polynomial")
    lo, hi = to_fraction(lo), to_fraction(hi)
    if not lo < hi:
        raise PolynomialError("sturm_count needs lo < hi")
    if p(lo) == 0 or p(hi) == 0:
        raise RootOnEndpoint("interval endpoint is a root")
    seq = sturm_sequence(p)
    return sign_variations(seq, lo) - sign_variations(seq, hi)


def cauchy_bound(p: Polynomial):
    """All roots satisfy |E| < bound."""
    if p.degree <= 0:
        return Fraction(1) if p.backend is Backend.EXACT else 1.0
    lead = abs(p.leading)
    m = max(abs(c) for c in p.coeffs[:-1])
    return 1 + m / lead


_SPLITS = (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(2, 5), Fraction(3, 5), Fraction(3, 7))


def _split_point(sf: Polynomial, lo: Fraction, hi: Fraction) -> Fraction:
    for t in _SPLITS:
        m = lo + (hi - lo) * t
        if sf(m) != 0:
            return m
    k = 7
    while True:  # finitely many roots, terminates
        m = lo + (hi - lo) * Fraction(k, 2 * k + 1)
        if sf(m) != 0:
            return m
        k += 1


def _isolate_exact(p: Polynomial) -> list[RootBracket]:
    if p.degree <= 0:
        return []
    seq = sturm_sequence(p)
    sf = seq[0]
    b = cauchy_bound(sf)
    lo, hi = -b, b
    out: list[RootBracket] = []

    def rec(lo, hi, vlo, vhi):
        n = vlo - vhi
        if n == 0:
            return
        if n == 1:
            out.append(RootBracket(lo, hi, 1))
            return
        mid = _split_point(sf, lo, hi)
        vmid = sign_variations(seq, mid)
        rec(lo, mid, vlo, vmid)
        rec(mid, hi, vmid, vhi)

    rec(lo, hi, sign_variations(seq, lo), sign_variations(seq, hi))
    return out


# ---------------------------------------------------------------------------
# float isolation: recursive derivative interleaving

_EPS = 2.0**-52


def horner_error_bound(p: Polynomial, x: float) -> float:
    """Forward error bound for float Horner evaluation of ``p`` at ``x``."""
    ax = abs(x)
    acc = 0.0
    for a in reversed(p.coeffs):
        acc = acc * ax + abs(a)
    return 4.0 * max(p.degree, 1) * _EPS * acc


def _tight(x: float) -> RootBracket:
    return RootBracket(math.nextafter(x, -math.inf), math.nextafter(x, math.inf), 1)


def _float_roots(p: Polynomial) -> list[float]:
    """Sorted distinct real roots of a float polynomial (multiple roots once)."""
    n = p.degree
    if n <= 0:
        return []
    if n == 1:
        return [-p.coeffs[0] / p.coeffs[1]]
    crit = _float_roots(p.derivative())
    b = float(cauchy_bound(p))
    pts = [-b] + [c for c in crit if -b < c < b] + [b]
    vals = []
    for i, x in enumerate(pts):
        fx = p(x)
        if 0 < i < len(pts) - 1 and abs(fx) <= horner_error_bound(p, x):
            fx = 0.0  # tangency at a critical point
        vals.append(fx)
    roots = [pts[i] for i in range(1, len(pts) - 1) if vals[i] == 0.0]
    for i in range(len(pts) - 1):
        if vals[i] * vals[i + 1] < 0:
            roots.append(brentq(p, pts[i], pts[i + 1], xtol=1e-300, rtol=4 * _EPS, maxiter=500))
    roots.sort()
    out = []
    for r in roots:
        if not out or r != out[-1]:
            out.append(r)
    return out


def isolate_real_roots(p: Polynomial) -> list[RootBracket]:
    """Disjoint isolating brackets for the distinct real roots, left to right."""
    if p.is_zero():
        raise PolynomialError("zero polynomial")
    if p.backend is Backend.EXACT:
        return _isolate_exact(p)
    return [_tight(r) for r in _float_roots(p)]


def refine_root(p: Polynomial, bracket: RootBracket, tol: float = 1e-12) -> Scalar:
    """Approximate the single root of ``p`` inside ``bracket`` to within ``tol``."""
    if tol <= 0:
        raise PolynomialError("tol must be positive")
    if bracket.count != 1:
        raise PolynomialError(f"bracket must isolate one root, has count {bracket.count}")
    if p.is_zero():
        raise PolynomialError("zero polynomial")
    if p.backend is Backend.FLOAT:
        lo, hi = float(bracket.lo), float(bracket.hi)
        flo, fhi = p(lo), p(hi)
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if flo * fhi < 0:
            return brentq(p, lo, hi, xtol=min(tol, 1e-15), rtol=4 * _EPS, maxiter=500)
        # even multiplicity: the root is a critical point
        dp = p.derivative()
        dlo, dhi = dp(lo), dp(hi)
        if dlo * dhi < 0:
            return brentq(dp, lo, hi, xtol=min(tol, 1e-15), rtol=4 * _EPS, maxiter=500)
        return 0.5 * (lo + hi)
    sf = squarefree_part(p)
    lo, hi = to_fraction(bracket.lo), to_fraction(bracket.hi)
    if sf(hi) == 0:
        return hi
    slo = _sign(sf(lo))
    if slo == 0:
        raise RootOnEndpoint("bracket endpoint lo is a root; brackets are half-open (lo, hi]")
    tol = to_fraction(tol)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        sm = _sign(sf(mid))
        if sm == 0:
            return mid
        if sm == slo:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def narrow_bracket(p: Polynomial, bracket: RootBracket, width) -> RootBracket:
    """Exact bisection of an isolating bracket down to ``hi - lo <= width``."""
    _require_exact(p)
    sf = squarefree_part(p)
    lo, hi = to_fraction(bracket.lo), to_fraction(bracket.hi)
    width = to_fraction(width)
    slo = _sign(sf(lo))
    while hi - lo > width:
        mid = _split_point(sf, lo, hi)
        if _sign(sf(mid)) == slo:
            lo = mid
        else:
            hi = mid
    return RootBracket(lo, hi, 1)


def rational_root_in(p: Polynomial, bracket: RootBracket) -> Fraction | None:
    """The root of ``p`` in ``bracket`` if it is rational, else None.

    A rational root of the primitive integer form has denominator dividing the
    leading coefficient L; two such fractions differ by at least 1/L**2, so
    once the bracket is narrower than that the only candidate is the best
    approximation with denominator <= L.
    """
    _require_exact(p)
    sf = squarefree_part(p)
    if sf.degree == 1:
        return -sf.coeffs[0] / sf.coeffs[1]
    lead = abs(_integer_primitive(sf)[-1])
    if sf(bracket.hi) == 0:
        return to_fraction(bracket.hi)
    b = narrow_bracket(sf, bracket, Fraction(1, 2 * lead * lead))
    cand = ((b.lo + b.hi) / 2).limit_denominator(lead)
    if b.lo < cand <= b.hi and sf(cand) == 0:
        return cand
    return None
