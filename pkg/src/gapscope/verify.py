"""Reference verification suite behind ``gapscope verify --suite paper``.

Each check reproduces one published closed-gap statement on concrete
inputs.  The report is plain text with no timings, so reruns with the same
seed are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .census import (
    DEFAULT_WITNESSES,
    KNOWN_TABLE,
    CensusConfig,
    characterization_check,
    default_witnesses,
    run_census,
    verify_known_table,
)
from .families import FAMILIES, FamilySpec, double_construct, make_family, match_predictions
from .jacobi import (
    Model,
    discriminant,
    make_vector,
    scale_offdiag,
    shift_potential,
)
from .poly import Backend, Polynomial
from .spectrum import (
    band_structure,
    closed_gaps_exact,
    closed_gaps_float,
    floquet_crosscheck,
    reflection_report,
)

THETA_GRID = [j / 16 for j in range(17)]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _F(*xs):
    return [Fraction(x) for x in xs]


def _brackets_sqrt2(bracket, sign: int) -> bool:
    """Exact test that sign*sqrt(2) lies in the half-open bracket (lo, hi]."""
    lo, hi = bracket
    if sign < 0:
        lo, hi = -hi, -lo  # reflect: now test sqrt(2) in [lo, hi)
        return (lo <= 0 or lo * lo <= 2) and hi > 0 and hi * hi > 2
    return (lo < 0 or lo * lo < 2) and hi > 0 and hi * hi >= 2


def check_exact_table() -> CheckResult:
    cases = [
        (_F(0, 5, 0, -5), [0]),
        (_F(2, 3, Fraction(3, 5), 5, Fraction(4, 5)), [0]),
        (_F(1, 0, 0, -1, 0, 0), [-1, 1]),
        (_F(0, 0, 0, 1, 0, 0, 0, -1), [-math.sqrt(2), 0, math.sqrt(2)]),
    ]
    notes, ok = [], True
    for v, want in cases:
        certs = closed_gaps_exact(make_vector(Model.DSO, v=v, backend=Backend.EXACT))
        good = len(certs) == len(want) and all(ct.exact and ct.bracket for ct in certs)
        for ct, E in zip(certs, want):
            if float(E).is_integer():
                good &= ct.value == Fraction(int(E))
            else:
                good &= ct.factor == Polynomial(_F(-2, 0, 1)) and _brackets_sqrt2(
                    ct.bracket, 1 if E > 0 else -1)
        ok &= good
        notes.append(f"p={len(v)}:{len(certs)}")
    return CheckResult("exact small-period table", ok, ", ".join(notes))


def check_odjm_witnesses() -> CheckResult:
    s = math.sqrt
    cases = [
        ([1, 2, 2, 1], [0.0]),
        ([2, 2, s(7 / 3), 4 / 3, s(7 / 3)], [-1.0, 1.0]),
        ([1, 2, 2, 1, 2 / s(7), 2 / s(7)], [-1.0, 0.0, 1.0]),
    ]
    ok, notes = True, []
    for a, want in cases:
        certs = closed_gaps_float(make_vector(Model.ODJM, a=a), 1e-8)
        got = [ct.energy for ct in certs]
        good = len(got) == len(want) and all(abs(x - y) <= 1e-9 for x, y in zip(got, want))
        ok &= good
        notes.append(f"p={len(a)}:{len(got)}")
    return CheckResult("odjm witnesses", ok, ", ".join(notes))


def check_small_periods(seed: int, table: dict | None = None) -> CheckResult:
    results = [run_census(CensusConfig(m, p, 1000, seed=seed, backend=Backend.EXACT))
               for m in (Model.DSO, Model.ODJM) for p in (2, 3)]
    zero = all(r.max_found == 0 for r in results)
    rep = verify_known_table(results, default_witnesses(), table)
    failed = [n for n, ok, _ in rep.checks if not ok]
    detail = "zero closed gaps in 4000 exact samples" if zero else "closed gap found at p <= 3"
    if failed:
        detail += "; table failures: " + "; ".join(failed)
    return CheckResult("impossibility at p <= 3 and known table", zero and rep.passed, detail)


def check_doubling() -> CheckResult:
    base = make_vector(Model.DSO, v=_F(0, 2), backend=Backend.EXACT)
    inst = double_construct(base, 2)
    want = sorted([1 - math.sqrt(3), 1 + math.sqrt(3)])
    got = sorted(pr.energy for pr in inst.predicted)
    g1 = band_structure(inst.vector).g
    ok1 = (len(got) == 2 and all(abs(x - y) <= 1e-9 for x, y in zip(got, want)) and g1 >= 2
           and not match_predictions(inst.predicted, closed_gaps_exact(inst.vector)))
    base2 = make_vector(Model.DSO, v=_F(0, 5, 0, -5), backend=Backend.EXACT)
    g2 = band_structure(double_construct(base2, 2).vector).g
    return CheckResult("doubling construction", ok1 and g2 >= 5, f"g(w)={g1} (>=2), g(w)={g2} (>=5)")


def check_lower_bounds() -> CheckResult:
    ok, notes = True, []

    def certified(name, p, energies, sign=None):
        inst = make_family(FamilySpec(name, {}, p))
        certs = band_structure(inst.vector).closed_gaps
        hit = all(any(abs(ct.energy - E) <= 1e-9 and (sign is None or ct.sign == sign)
                      for ct in certs) for E in energies)
        return hit and not match_predictions(inst.predicted, certs)

    for p in range(7, 13):
        name = "dso-odd-spike" if p % 2 else "dso-even-spike"
        good = certified(name, p, [0.0])
        ok &= good
        notes.append(f"{name} p={p}" + ("" if good else " FAIL"))
    for name, p in (("odjm-3mod4", 7), ("odjm-3mod4", 11), ("odjm-1mod4", 9)):
        good = certified(name, p, [-1.0, 1.0])
        ok &= good
        notes.append(f"{name} p={p}" + ("" if good else " FAIL"))
    for p in (8, 10, 12):
        good = certified("odjm-even-balanced", p, [0.0], (-1) ** (p // 2))
        ok &= good
        notes.append(f"odjm-even-balanced p={p}" + ("" if good else " FAIL"))
    return CheckResult("lower-bound constructions p=7..12", ok, f"{len(notes)} instances")


def random_rational(rng: np.random.Generator, model: Model, p: int, den: int = 60):
    def rat(lo, hi):
        return Fraction(int(rng.integers(int(lo * den), int(hi * den) + 1)), den)

    a = [rat(0.25, 4) for _ in range(p)] if model is not Model.DSO else None
    if a is not None:
        a = [max(x, Fraction(1, den)) for x in a]
    v = [rat(-3, 3) for _ in range(p)] if model is not Model.ODJM else None
    return make_vector(model, a=a, v=v, backend=Backend.EXACT)


def check_dual_path(seed: int) -> CheckResult:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(6,)))
    vectors = []
    for model in (Model.DSO, Model.ODJM, Model.JAC):
        for i in range(50):
            vectors.append(random_rational(rng, model, 2 + i % 5))
    vectors += [make_family(spec, Backend.EXACT).vector for spec in DEFAULT_WITNESSES
                if FAMILIES[spec.id].rational and FAMILIES[spec.id].period <= 6]
    worst_edge = worst_floquet = 0.0
    mismatched = 0
    for c in vectors:
        ex = band_structure(c)
        fl = band_structure(c.to_float())
        if (ex.g != fl.g or [ct.sign for ct in ex.closed_gaps] != [ct.sign for ct in fl.closed_gaps]):
            mismatched += 1
        worst_edge = max(worst_edge, max(abs(x - y) for x, y in zip(ex.edges(), fl.edges())))
        worst_floquet = max(worst_floquet, floquet_crosscheck(c.to_float(), THETA_GRID, fl))
    ok = mismatched == 0 and worst_edge <= 1e-8 and worst_floquet <= 1e-8
    return CheckResult("dual-path consistency", ok,
                       f"{len(vectors)} vectors, count mismatches={mismatched}, "
                       f"edge dev={worst_edge:.2e}, floquet dev={worst_floquet:.2e}")


def check_symmetry(seed: int) -> CheckResult:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    refl = interior = True
    for i in range(100):
        p = 1 + i % 7
        c = random_rational(rng, Model.ODJM, p)
        d = discriminant(c).poly
        d_neg = Polynomial([(-1) ** k * x for k, x in enumerate(d.coeffs)])
        refl &= d_neg == d.scale((-1) ** p)
        if p % 2:
            interior &= reflection_report(c).zero_status == "band-interior"
    shift = scale = True
    cst = Fraction(7, 3)
    for spec in (FamilySpec("dso-p4", {"lambda": Fraction(5)}),
                 FamilySpec("dso-p5-minus", {"lambda": Fraction(2), "eta": Fraction(3)}),
                 FamilySpec("dso-p8", {"lambda": Fraction(1)})):
        c = make_family(spec, Backend.EXACT).vector
        base = closed_gaps_exact(c)
        moved = closed_gaps_exact(shift_potential(c, cst))
        shift &= [(ct.value, ct.sign) for ct in moved if ct.value is not None] == \
            [(ct.value + cst, ct.sign) for ct in base if ct.value is not None]
        shift &= len(moved) == len(base)
    for i in range(20):
        c = random_rational(rng, Model.DSO, 1 + i % 6)
        lhs = discriminant(shift_potential(c, cst)).poly
        shift &= lhs == discriminant(c).poly.shift_var(-cst)  # D_{v+c}(E) = D_v(E - c)
    for a1, a2, a3 in ((1, 2, 2), (3, 1, 2), (Fraction(1, 2), 5, 3)):
        c = make_family(FamilySpec("odjm-p4", {"a1": Fraction(a1), "a2": Fraction(a2),
                                               "a3": Fraction(a3)}), Backend.EXACT).vector
        base = closed_gaps_exact(c)
        scaled = closed_gaps_exact(scale_offdiag(c, cst))
        scale &= [(ct.value, ct.sign) for ct in scaled] == [(ct.value * cst, ct.sign) for ct in base]
    for i in range(20):
        c = random_rational(rng, Model.ODJM, 1 + i % 7)
        d = discriminant(c).poly
        ds = discriminant(scale_offdiag(c, cst)).poly
        scale &= ds == Polynomial([x / cst ** k for k, x in enumerate(d.coeffs)])
    ok = refl and interior and shift and scale
    return CheckResult("symmetry properties", ok,
                       f"reflection={refl}, odd-p interior={interior}, shift={shift}, scale={scale}")


def check_genericity(seed: int, n: int = 10_000) -> CheckResult:
    bad = []
    for model in (Model.DSO, Model.ODJM, Model.JAC):
        for p in range(1, 7):
            r = run_census(CensusConfig(model, p, n, seed=seed))
            if r.max_found:
                bad.append(f"{model.value} p={p}")
    detail = f"18 x {n} float samples, no closed gaps" if not bad else "closed gaps in " + ", ".join(bad)
    return CheckResult("genericity", not bad, detail)


def check_characterization(seed: int, samples: int = 20) -> CheckResult:
    ok, worst, notes = True, 0.0, []
    for model in (Model.DSO, Model.ODJM):
        for p in (4, 5):
            rep = characterization_check(model, p, samples, seed)
            ok &= rep.passed and rep.converse_total > 0
            worst = max(worst, rep.max_fit_residual)
            notes.append(f"{model.value} p={p}: {rep.forward_total} fwd, {rep.converse_total} conv")
    return CheckResult("characterization round-trip", ok,
                       "; ".join(notes) + f"; max fit residual {worst:.1e}")


def run_suite(seed: int = 0, table: dict | None = None) -> list[CheckResult]:
    table = KNOWN_TABLE if table is None else table
    return [
        check_exact_table(),
        check_odjm_witnesses(),
        check_small_periods(seed, table),
        check_doubling(),
        check_lower_bounds(),
        check_dual_path(seed),
        check_symmetry(seed),
        check_genericity(seed),
        check_characterization(seed),
    ]


def format_report(results: list[CheckResult], seed: int) -> str:
    lines = [f"verification suite (seed {seed})"]
    lines += [f"{i}. {r.line()}" for i, r in enumerate(results, 1)]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
