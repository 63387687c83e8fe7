"""Bands, gaps and closed-gap certificates of periodic Jacobi matrices.

Two paths compute the same report.  The exact path works with the rational
polynomial monodromy: band edges are the real roots of D - 2 and D + 2
(isolated by Sturm sequences, multiplicities from a square-free
decomposition) and a closed gap is certified by a common root of
``P12, P21, P11 - sigma*s, P22 - sigma*s``, i.e. ``Phi(E) = sigma * 1``.

The float path never expands D into coefficients (that form loses all
accuracy for p around 12 and up).  Band edges are seeded by the periodic and
antiperiodic Floquet eigenvalues, then polished as roots of D -/+ 2 evaluated
through the transfer product.  Each gap holds exactly one critical point of
D; a gap is closed when the monodromy there is within ``tol`` of
``sigma * 1`` in the max norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .jacobi import (
    CoefficientVector,
    Model,
    discriminant,
    discriminant_and_derivative,
    monodromy_poly,
    monodromy_product,
    scalar_to_json,
)
from .poly import (
    Backend,
    Polynomial,
    RootBracket,
    gcd_many,
    isolate_real_roots,
    narrow_bracket,
    rational_root_in,
    sign_variations,
    squarefree_decomposition,
    squarefree_part,
    sturm_sequence,
)

CLOSED_GAP_TOL = 1e-8
_EPS = 2.0**-52


class NumericalError(RuntimeError):
    """Root counts or report invariants came out inconsistent."""


class ModelError(ValueError):
    pass


def merge_tol(radius: float) -> float:
    """Band-edge coincidence tolerance, scaled by the spectral radius."""
    return 1e-9 * (1.0 + radius)


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float
    index: int


@dataclass(frozen=True)
class GapRecord:
    lo: float
    hi: float
    status: str
    index: int

    @property
    def closed(self) -> bool:
        return self.status == "closed"


@dataclass(frozen=True)
class ClosedGapCertificate:
    """Energy E with Phi(E) = sign * 1.

    On the exact path ``value`` holds the energy when it is rational, and
    ``bracket``/``factor`` always pin it down: ``factor`` is a square-free
    rational polynomial with exactly one root in ``bracket`` (half-open).
    """

    energy: float
    sign: int
    residual: float
    gap_index: int
    exact: bool = False
    value: Fraction | None = None
    bracket: tuple | None = None
    factor: Polynomial | None = None

    def to_dict(self) -> dict:
        d = {
            "energy": str(self.value) if self.value is not None else self.energy,
            "energy_approx": self.energy,
            "sign": self.sign,
            "residual": self.residual,
            "gap_index": self.gap_index,
            "exact": self.exact,
        }
        if self.bracket is not None:
            d["bracket"] = [str(self.bracket[0]), str(self.bracket[1])]
        if self.factor is not None:
            d["factor"] = [str(c) for c in self.factor.coeffs]
        return d


@dataclass(frozen=True)
class SpectrumReport:
    model: Model
    p: int
    backend: Backend
    bands: tuple
    gaps: tuple
    closed_gaps: tuple
    radius: float = field(default=0.0)

    @property
    def g(self) -> int:
        return len(self.closed_gaps)

    def edges(self) -> list[float]:
        out = []
        for b in self.bands:
            out += [b.lo, b.hi]
        return out

    def validate(self) -> None:
        if len(self.bands) != self.p or len(self.gaps) != self.p - 1:
            raise NumericalError("band/gap count does not match the period")
        tol = merge_tol(self.radius)
        for b in self.bands:
            if not b.lo < b.hi:
                raise NumericalError(f"degenerate band {b}")
        for b0, b1 in zip(self.bands, self.bands[1:]):
            if not b0.hi <= b1.lo + tol:
                raise NumericalError("bands overlap")
        for gap in self.gaps:
            if gap.closed and abs(gap.hi - gap.lo) > tol:
                raise NumericalError(f"closed gap with separated edges {gap}")
            if not gap.closed and not gap.lo < gap.hi:
                raise NumericalError(f"open gap without width {gap}")
        if sum(gap.closed for gap in self.gaps) != len(self.closed_gaps):
            raise NumericalError("closed-gap records and certificates disagree")

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "p": self.p,
            "backend": self.backend.value,
            "bands": [{"lo": b.lo, "hi": b.hi} for b in self.bands],
            "gaps": [{"lo": gp.lo, "hi": gp.hi, "status": gp.status} for gp in self.gaps],
            "closed_gaps": [c.to_dict() for c in self.closed_gaps],
            "g": self.g,
        }


# ---------------------------------------------------------------------------
# Floquet matrices

def floquet_matrix(c: CoefficientVector, theta: float) -> np.ndarray:
    """The p x p Hermitian matrix J(theta) with phase-twisted corner entries."""
    a = np.array([float(x) for x in c.a])
    v = np.array([float(x) for x in c.v])
    p = c.p
    J = np.diag(v).astype(complex)
    for n in range(p - 1):
        J[n, n + 1] += a[n]
        J[n + 1, n] += a[n]
    ph = np.exp(2j * np.pi * theta)
    J[0, p - 1] += a[p - 1] * np.conj(ph)
    J[p - 1, 0] += a[p - 1] * ph
    return J


def _real_embedding(H: np.ndarray) -> np.ndarray:
    X, Y = H.real, H.imag
    return np.block([[X, -Y], [Y, X]])


def floquet_eigenvalues(c: CoefficientVector, theta: float) -> np.ndarray:
    """Eigenvalues of J(theta) from the 2p x 2p real symmetric embedding."""
    ev = np.linalg.eigvalsh(_real_embedding(floquet_matrix(c, theta)))
    return ev[::2]


def _edge_seeds(c: CoefficientVector) -> np.ndarray:
    per = np.linalg.eigvalsh(floquet_matrix(c, 0.0).real)
    anti = np.linalg.eigvalsh(floquet_matrix(c, 0.5).real)
    return np.sort(np.concatenate([per, anti]))


# ---------------------------------------------------------------------------
# float path

def _D(c, E):
    m = monodromy_product(c, E)
    return m[0] + m[3]


def _Dprime(c, E):
    return discriminant_and_derivative(c, E)[1]


def _residual(c, E, sigma) -> float:
    m11, m12, m21, m22 = monodromy_product(c, E)
    return max(abs(m11 - sigma), abs(m12), abs(m21), abs(m22 - sigma))


def _root(f, lo, hi):
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NumericalError("no sign change while polishing a band edge")
    # absolute floor keeps roots at exactly 0 from chasing subnormals
    return brentq(f, lo, hi, xtol=1e-30, rtol=4 * _EPS, maxiter=500)


def _outer_edge(c, seed, inner, direction, sigma):
    """Edge where D = 2*sigma between ``inner`` (in the band) and the outside."""
    f = lambda E: _D(c, E) - 2 * sigma
    pad = 1e-7 * (1.0 + abs(seed))
    for _ in range(80):
        x = seed + direction * pad
        if f(x) * sigma > 0:
            lo, hi = (x, inner) if direction < 0 else (inner, x)
            return _root(f, lo, hi)
        pad *= 2
    raise NumericalError("could not bracket an outer band edge")


@dataclass(frozen=True)
class _GapScan:
    index: int
    sign: int
    crit: float
    residual: float
    excess: float


def _scan_gaps(c: CoefficientVector, tol: float):
    """Band midpoints, gap critical points and closed-gap residuals (float)."""
    p = c.p
    seeds = _edge_seeds(c)
    mids = [(seeds[2 * j] + seeds[2 * j + 1]) / 2 for j in range(p)]
    radius = float(max(abs(seeds[0]), abs(seeds[-1])))
    scans = []
    for j in range(p - 1):
        sigma = (-1) ** (p - 1 - j)
        x0, x1 = mids[j], mids[j + 1]
        crit = _root(lambda E: _Dprime(c, E), x0, x1)
        excess = sigma * _D(c, crit) - 2.0
        res = _residual(c, crit, sigma)
        if res > tol and excess <= 2 * tol:
            # Brent polish of the max-norm residual in a window around the critical point
            w = max(merge_tol(radius), 4 * math.sqrt(max(excess, 0.0) + _EPS))
            lo, hi = max(x0, crit - w), min(x1, crit + w)
            opt = minimize_scalar(lambda E: _residual(c, E, sigma), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-15})
            if opt.fun < res:
                crit, res = float(opt.x), float(opt.fun)
        scans.append(_GapScan(j + 1, sigma, float(crit), float(res), float(excess)))
    return seeds, mids, radius, scans


def closed_gaps_float(c: CoefficientVector, tol: float = CLOSED_GAP_TOL) -> list[ClosedGapCertificate]:
    """Closed gaps certified by the residual ``max|Phi(E) - sigma*1| <= tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    cf = c.to_float()
    if cf.p == 1:
        return []
    _, _, _, scans = _scan_gaps(cf, tol)
    return [ClosedGapCertificate(s.crit, s.sign, s.residual, s.index)
            for s in scans if s.residual <= tol]


def _band_structure_float(c: CoefficientVector, tol: float) -> SpectrumReport:
    cf = c.to_float()
    p = cf.p
    if p == 1:
        a, v = float(cf.a[0]), float(cf.v[0])
        rep = SpectrumReport(c.model, 1, c.backend, (Band(v - 2 * a, v + 2 * a, 1),), (), (),
                             abs(v) + 2 * a)
        rep.validate()
        return rep
    seeds, mids, radius, scans = _scan_gaps(cf, tol)
    edges = [None] * (2 * p)
    edges[0] = _outer_edge(cf, seeds[0], mids[0], -1, (-1) ** p)
    edges[-1] = _outer_edge(cf, seeds[-1], mids[-1], +1, 1)
    gaps, certs = [], []
    for s in scans:
        j = s.index - 1
        if s.residual <= tol:
            edges[2 * j + 1] = edges[2 * j + 2] = s.crit
            gaps.append(GapRecord(s.crit, s.crit, "closed", s.index))
            certs.append(ClosedGapCertificate(s.crit, s.sign, s.residual, s.index))
            continue
        if s.excess <= 0:
            raise NumericalError(f"gap {s.index} is neither separated nor certified closed")
        f = lambda E, sg=s.sign: _D(cf, E) - 2 * sg
        lo = _root(f, mids[j], s.crit)
        hi = _root(f, s.crit, mids[j + 1])
        edges[2 * j + 1], edges[2 * j + 2] = lo, hi
        gaps.append(GapRecord(lo, hi, "open", s.index))
    bands = tuple(Band(float(edges[2 * j]), float(edges[2 * j + 1]), j + 1) for j in range(p))
    rep = SpectrumReport(c.model, p, c.backend, bands, tuple(gaps), tuple(certs), radius)
    rep.validate()
    return rep


# ---------------------------------------------------------------------------
# exact path

def _float_of_root(factor: Polynomial, br: RootBracket) -> tuple[float, Fraction | None, RootBracket]:
    r = rational_root_in(factor, br)
    if r is not None:
        return float(r), r, br
    lo = abs(float(br.lo)) + abs(float(br.hi))
    nb = narrow_bracket(factor, br, Fraction(max(lo, 1.0)) * Fraction(1, 2**60))
    return float((nb.lo + nb.hi) / 2), None, nb


def _gap_index(dseq, x_lo) -> int:
    return sign_variations(dseq, -math.inf) - sign_variations(dseq, x_lo)


def closed_gaps_exact(c: CoefficientVector) -> list[ClosedGapCertificate]:
    """Bit-exact closed gaps: real roots of gcd(P12, P21, P11 - sigma s, P22 - sigma s)."""
    if c.backend is not Backend.EXACT:
        from .poly import BackendError

        raise BackendError("closed_gaps_exact needs the exact backend")
    if c.p == 1:
        return []
    mp = monodromy_poly(c)
    s = mp.s
    sc = Polynomial.constant(s)
    dpoly = discriminant(c).poly
    dseq = sturm_sequence(dpoly)
    certs = []
    for sigma in (1, -1):
        sg = sc.scale(sigma)
        G = gcd_many([mp.p12, mp.p21, mp.p11 - sg, mp.p22 - sg])
        if G.degree <= 0:
            continue
        sf = squarefree_part(G)
        found = []
        for br in isolate_real_roots(sf):
            approx, value, nb = _float_of_root(sf, br)
            if value is None:
                # shrink until the bracket holds no root of D, so the gap index is well defined
                while sign_variations(dseq, nb.lo) != sign_variations(dseq, nb.hi):
                    nb = narrow_bracket(sf, nb, nb.width / 4)
                j = _gap_index(dseq, nb.lo)
            else:
                j = _gap_index(dseq, value)
            found.append((approx, value, nb, j))
        rational = [x[1] for x in found if x[1] is not None]
        rest = sf
        for r in rational:
            rest = rest // Polynomial((-r, 1))
        for approx, value, nb, j in found:
            factor = Polynomial((-value, 1)) if value is not None else rest.monic()
            certs.append(ClosedGapCertificate(approx, sigma, 0.0, j, True, value,
                                              (nb.lo, nb.hi), factor))
    certs.sort(key=lambda z: z.energy)
    return certs


def _band_structure_exact(c: CoefficientVector) -> SpectrumReport:
    p = c.p
    if p == 1:
        a, v = c.a[0], c.v[0]
        rep = SpectrumReport(c.model, 1, c.backend, (Band(float(v - 2 * a), float(v + 2 * a), 1),),
                             (), (), float(abs(v) + 2 * a))
        rep.validate()
        return rep
    dpoly = discriminant(c).poly
    edges = []  # (value, root id, multiplicity)
    rid = 0
    for sigma in (1, -1):
        q = dpoly - Polynomial.constant(2 * sigma)
        for factor, mult in squarefree_decomposition(q):
            for br in isolate_real_roots(factor):
                val = _float_of_root(factor, br)[0]
                edges.append((val, rid, mult))
                rid += 1
    total = sum(m for _, _, m in edges)
    if total != 2 * p or any(m > 2 for _, _, m in edges):
        raise NumericalError(f"expected 2p = {2 * p} band edges with multiplicity, found {total}")
    flat = []
    for val, r, m in sorted(edges):
        flat += [(val, r)] * m
    certs = closed_gaps_exact(c)
    bands = tuple(Band(flat[2 * j][0], flat[2 * j + 1][0], j + 1) for j in range(p))
    gaps = []
    for j in range(p - 1):
        (lo, r0), (hi, r1) = flat[2 * j + 1], flat[2 * j + 2]
        gaps.append(GapRecord(lo, hi, "closed" if r0 == r1 else "open", j + 1))
    closed_idx = sorted(gp.index for gp in gaps if gp.closed)
    if closed_idx != sorted(ct.gap_index for ct in certs):
        raise NumericalError("double roots of D -/+ 2 and gcd certificates disagree")
    radius = max(abs(flat[0][0]), abs(flat[-1][0]))
    rep = SpectrumReport(c.model, p, c.backend, bands, tuple(gaps), tuple(certs), radius)
    rep.validate()
    return rep


# ---------------------------------------------------------------------------
# public entry points

def band_structure(c: CoefficientVector, tol: float = CLOSED_GAP_TOL) -> SpectrumReport:
    """Bands, gaps and closed-gap certificates on c's backend.

    Exact edges are bisected down to float resolution (well inside the
    1e-12 refinement target); ``tol`` is the float closed-gap residual.
    """
    if c.backend is Backend.EXACT:
        return _band_structure_exact(c)
    return _band_structure_float(c, tol)


def closed_gaps(c: CoefficientVector, tol: float = CLOSED_GAP_TOL) -> list[ClosedGapCertificate]:
    if c.backend is Backend.EXACT:
        return closed_gaps_exact(c)
    return closed_gaps_float(c, tol)


def band_function(c: CoefficientVector, theta: float,
                  report: SpectrumReport | None = None) -> list[float]:
    """The p sorted solutions of D(E) = 2 cos(2 pi theta), one per band."""
    rep = report if report is not None else band_structure(c)
    cf = c.to_float()
    y = 2.0 * math.cos(2.0 * math.pi * theta)
    out = []
    for b in rep.bands:
        f = lambda E: _D(cf, E) - y
        flo, fhi = f(b.lo), f(b.hi)
        if flo == 0.0:
            out.append(b.lo)
        elif fhi == 0.0:
            out.append(b.hi)
        elif flo * fhi < 0:
            out.append(brentq(f, b.lo, b.hi, xtol=1e-300, rtol=4 * _EPS, maxiter=500))
        else:
            # y = +/-2 sits on a band edge up to rounding
            out.append(b.lo if abs(flo) <= abs(fhi) else b.hi)
    if len(out) != rep.p:
        raise NumericalError("band function lost a solution")
    return sorted(out)


def floquet_crosscheck(c: CoefficientVector, theta_grid: Sequence[float],
                       report: SpectrumReport | None = None) -> float:
    """Max |eigenvalue of J(theta) - band_function(theta)| over the grid."""
    rep = report if report is not None else band_structure(c)
    worst = 0.0
    for theta in theta_grid:
        ev = np.sort(floquet_eigenvalues(c, theta))
        bf = np.array(band_function(c, theta, rep))
        worst = max(worst, float(np.max(np.abs(ev - bf))))
    return worst


@dataclass(frozen=True)
class ReflectionReport:
    symmetric: bool
    zero_status: str
    consistent: bool


def reflection_report(c: CoefficientVector, report: SpectrumReport | None = None) -> ReflectionReport:
    """E -> -E symmetry of an off-diagonal spectrum and where E = 0 falls."""
    if c.model is not Model.ODJM:
        raise ModelError("reflection_report needs an odjm vector")
    rep = report if report is not None else band_structure(c)
    tol = merge_tol(rep.radius)
    edges = rep.edges()
    mirrored = sorted(-e for e in edges)
    symmetric = all(abs(x - y) <= tol for x, y in zip(sorted(edges), mirrored))
    if c.backend is Backend.EXACT:
        d = discriminant(c).poly
        d_neg = Polynomial([(-1) ** i * x for i, x in enumerate(d.coeffs)])
        symmetric = symmetric and d_neg == d.scale((-1) ** c.p)
        d0 = d(0)
        if abs(d0) < 2:
            status = "band-interior"
        elif any(ct.value == 0 for ct in rep.closed_gaps):
            status = "closed-gap"
        else:
            status = "open-gap"
    else:
        if any(abs(ct.energy) <= tol for ct in rep.closed_gaps):
            status = "closed-gap"
        elif any(b.lo < 0.0 < b.hi for b in rep.bands):
            status = "band-interior"
        else:
            status = "open-gap"
    consistent = (status == "band-interior") if c.p % 2 else (status != "band-interior")
    return ReflectionReport(symmetric, status, consistent)


__all__ = [
    "Band", "GapRecord", "ClosedGapCertificate", "SpectrumReport", "NumericalError",
    "ModelError", "band_structure", "closed_gaps", "closed_gaps_exact", "closed_gaps_float",
    "band_function", "floquet_crosscheck", "floquet_matrix", "floquet_eigenvalues",
    "reflection_report", "ReflectionReport", "merge_tol", "scalar_to_json",
]
