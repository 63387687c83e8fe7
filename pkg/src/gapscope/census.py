"""Seeded random searches over coefficient space.

Samples are drawn in fixed-size chunks; chunk ``i`` owns the RNG stream
``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on how many
worker threads (``GAPSCOPE_THREADS``) process the chunks.

On the float backend a closed gap forces a double eigenvalue of J(0) or
J(1/2), so every sample first goes through a batched eigenvalue screen and
only near-degenerate ones are certified with the full residual test.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .families import (
    FamilyInstance,
    FamilySpec,
    make_family,
    match_predictions,
    sample_family,
)
from .jacobi import (
    CoefficientVector,
    Model,
    cyclic_shift,
    is_irreducible,
    make_vector,
    monodromy_product,
    vector_to_dict,
)
from .poly import Backend
from .spectrum import band_structure, closed_gaps_exact, closed_gaps_float

CHUNK = 512
SCREEN_GAP = 1e-4
EXACT_DENOMINATOR = 1000

KNOWN_TABLE = {
    Model.DSO: {1: 0, 2: 0, 3: 0, 4: 1, 5: 1, 6: 2},
    Model.ODJM: {1: 0, 2: 0, 3: 0, 4: 1, 5: 2, 6: 3},
}


class CensusError(RuntimeError):
    pass


@dataclass(frozen=True)
class CensusConfig:
    model: Model
    p: int
    n: int
    seed: int = 0
    R: float = 3.0
    a_range: tuple = (0.25, 4.0)
    backend: Backend = Backend.FLOAT
    tol: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))
        object.__setattr__(self, "backend", Backend(self.backend))
        if self.p < 1:
            raise ValueError("period must be >= 1")
        if self.n < 1:
            raise ValueError("sample count must be >= 1")
        if not self.R > 0:
            raise ValueError("R must be positive")
        lo, hi = self.a_range
        if not 0 < lo <= hi:
            raise ValueError("a_range must be a positive interval")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def to_dict(self) -> dict:
        return {"model": self.model.value, "p": self.p, "n": self.n, "seed": self.seed,
                "R": self.R, "a_range": list(self.a_range), "backend": self.backend.value,
                "tol": self.tol}


@dataclass
class CensusResult:
    config: CensusConfig
    histogram: dict
    max_found: int
    witnesses: dict
    injected: list = field(default_factory=list)
    bound_check: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.bound_check.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "max_found": self.max_found,
            "witnesses": {str(k): [vector_to_dict(w) for w in ws]
                          for k, ws in sorted(self.witnesses.items())},
            "injected": [{"name": name, "g": g} for name, g in self.injected],
            "bound_check": dict(self.bound_check),
        }


# ---------------------------------------------------------------------------
# sampling

def _draw(cfg: CensusConfig, rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray]:
    p = cfg.p
    lo, hi = cfg.a_range
    if cfg.model is Model.DSO:
        A = np.ones((m, p))
    else:
        A = np.exp(rng.uniform(math.log(lo), math.log(hi), size=(m, p)))
    if cfg.model is Model.ODJM:
        V = np.zeros((m, p))
    else:
        V = rng.uniform(-cfg.R, cfg.R, size=(m, p))
    return A, V


def _to_vector(cfg: CensusConfig, a_row, v_row) -> CoefficientVector:
    if cfg.backend is Backend.FLOAT:
        return make_vector(cfg.model, a=[float(x) for x in a_row], v=[float(x) for x in v_row])
    den = EXACT_DENOMINATOR
    a = [max(Fraction(round(x * den), den), Fraction(1, den)) for x in a_row]
    v = [Fraction(round(x * den), den) for x in v_row]
    return make_vector(cfg.model, a=a, v=v, backend=Backend.EXACT)


def floquet_batch(A: np.ndarray, V: np.ndarray, sign: float) -> np.ndarray:
    """Stack of real symmetric J(theta) for theta = 0 (sign=+1) or 1/2 (sign=-1)."""
    m, p = A.shape
    J = np.zeros((m, p, p))
    idx = np.arange(p)
    J[:, idx, idx] = V
    if p == 1:
        J[:, 0, 0] += 2 * sign * A[:, 0]
        return J
    off = np.arange(p - 1)
    J[:, off, off + 1] += A[:, :-1]
    J[:, off + 1, off] += A[:, :-1]
    J[:, 0, p - 1] += sign * A[:, -1]
    J[:, p - 1, 0] += sign * A[:, -1]
    return J


def screen_candidates(A: np.ndarray, V: np.ndarray, gap: float = SCREEN_GAP) -> np.ndarray:
    """Rows whose periodic or antiperiodic spectrum has a near-double eigenvalue."""
    m, p = A.shape
    if p == 1:
        return np.zeros(m, dtype=bool)
    flag = np.zeros(m, dtype=bool)
    for sign in (1.0, -1.0):
        ev = np.linalg.eigvalsh(floquet_batch(A, V, sign))
        radius = np.max(np.abs(ev), axis=1)
        flag |= np.min(np.diff(ev, axis=1), axis=1) <= gap * (1.0 + radius)
    return flag


def _analyze(cfg: CensusConfig, c: CoefficientVector) -> int:
    if cfg.backend is Backend.EXACT:
        return len(closed_gaps_exact(c))
    return len(closed_gaps_float(c, cfg.tol))


def _run_chunk(cfg: CensusConfig, chunk: int, m: int):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(chunk,)))
    A, V = np.empty((0, cfg.p)), np.empty((0, cfg.p))
    rejected = 0
    vectors: list[CoefficientVector] = []
    while len(vectors) < m:
        a_new, v_new = _draw(cfg, rng, m - len(vectors))
        keep = []
        for i in range(len(a_new)):
            c = _to_vector(cfg, a_new[i], v_new[i])
            if is_irreducible(c):
                vectors.append(c)
                keep.append(i)
            else:
                rejected += 1
        if rejected > 100 * m:
            raise CensusError(f"more than {100 * m} reducible draws in chunk {chunk}")
        A, V = np.vstack([A, a_new[keep]]), np.vstack([V, v_new[keep]])
    counts = [0] * m
    if cfg.backend is Backend.FLOAT:
        todo = np.flatnonzero(screen_candidates(A, V))
    else:
        todo = range(m) if cfg.p > 1 else ()
    for i in todo:
        counts[i] = _analyze(cfg, vectors[i])
    return chunk, counts, vectors


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GAPSCOPE_THREADS", "1")))
    except ValueError:
        return 1


def run_census(cfg: CensusConfig, inject: Iterable[FamilyInstance] = ()) -> CensusResult:
    """Closed-gap histogram over ``cfg.n`` random irreducible samples.

    ``inject`` adds known family witnesses; they count towards ``max_found``
    and the witness list but not towards the random-sample histogram.
    """
    sizes = [min(CHUNK, cfg.n - start) for start in range(0, cfg.n, CHUNK)]
    jobs = list(enumerate(sizes))
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda job: _run_chunk(cfg, *job), jobs))
    else:
        parts = [_run_chunk(cfg, *job) for job in jobs]
    parts.sort(key=lambda t: t[0])

    hist: Counter = Counter()
    witnesses: dict[int, list] = {}
    for _, counts, vectors in parts:
        for g, c in zip(counts, vectors):
            hist[g] += 1
            if g >= 1 and len(witnesses.setdefault(g, [])) < 10:
                witnesses[g].append(c)
    max_found = max(hist) if hist else 0

    injected = []
    for inst in inject:
        if inst.vector.model is not cfg.model or inst.vector.p != cfg.p:
            raise ValueError("injected witness does not match the census model and period")
        g = band_structure(inst.vector, cfg.tol).g
        name = inst.spec.id if inst.spec is not None else "custom"
        injected.append((name, g))
        max_found = max(max_found, g)
        if g >= 1 and len(witnesses.setdefault(g, [])) < 10:
            witnesses[g].append(inst.vector)

    res = CensusResult(cfg, dict(hist), max_found, witnesses, injected)
    res.bound_check = bound_checks(cfg.model, cfg.p, [g for g in hist] + [g for _, g in injected])
    return res


def upper_bound(model: Model, p: int) -> int:
    """Best general upper bound on the number of closed gaps at period p."""
    if p < 2:
        return 0
    bound = p - 2
    if p >= 3 and (model is Model.ODJM or (model is Model.DSO and p % 4 != 2)):
        bound = p - 3
    return max(bound, 0)


def bound_checks(model: Model, p: int, counts: Sequence[int],
                 table: dict | None = None) -> dict:
    table = KNOWN_TABLE if table is None else table
    counts = list(counts) or [0]
    checks = {"p-2": max(counts) <= max(p - 2, 0),
              "upper_bound": max(counts) <= upper_bound(model, p)}
    if model is Model.ODJM and p % 2:
        checks["odd_parity"] = all(g % 2 == 0 for g in counts)
    known = table.get(model, {}).get(p)
    if known is not None:
        checks["table"] = max(counts) <= known
    return checks


# ---------------------------------------------------------------------------
# the known small-period table

DEFAULT_WITNESSES = (
    FamilySpec("dso-p4", {"lambda": Fraction(5)}),
    FamilySpec("dso-p5-plus", {"lambda": Fraction(2), "eta": Fraction(3)}),
    FamilySpec("dso-p6", {"a": Fraction(1)}),
    FamilySpec("odjm-p4", {"a1": Fraction(1), "a2": Fraction(2), "a3": Fraction(2)}),
    FamilySpec("odjm-p5", {"alpha": 2.0, "beta": 2.0}),
    FamilySpec("odjm-p6", {"alpha": 1.0, "beta": 2.0}),
    FamilySpec("dso-p8", {"lambda": Fraction(1)}),
)


def default_witnesses() -> list[FamilyInstance]:
    return [make_family(s) for s in DEFAULT_WITNESSES]


@dataclass
class TableReport:
    checks: list  # (name, passed, detail)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in self.checks]}


def verify_known_table(results: Sequence[CensusResult], injected: Sequence[FamilyInstance],
                       table: dict | None = None) -> TableReport:
    """Check census output and injected witnesses against the known table and bounds."""
    table = KNOWN_TABLE if table is None else table
    checks = []
    for r in results:
        m, p = r.config.model, r.config.p
        known = table.get(m, {}).get(p)
        if known is not None:
            checks.append((f"{m.value} p={p} census <= {known}", r.max_found <= known,
                           f"max_found={r.max_found}"))
        ub = upper_bound(m, p)
        checks.append((f"{m.value} p={p} census <= bound {ub}", r.max_found <= ub,
                       f"max_found={r.max_found}"))
        if m is Model.ODJM and p % 2:
            ok = all(g % 2 == 0 for g in r.histogram)
            checks.append((f"odjm p={p} even counts", ok, f"counts={sorted(r.histogram)}"))

    best: dict = {}
    for inst in injected:
        m, p = inst.vector.model, inst.vector.p
        g = band_structure(inst.vector).g
        best[(m, p)] = max(best.get((m, p), 0), g)
        label = inst.spec.id if inst.spec is not None else f"{m.value} p={p}"
        known = table.get(m, {}).get(p)
        if known is not None:
            checks.append((f"witness {label} <= {known}", g <= known, f"g={g}"))
        ub = upper_bound(m, p)
        checks.append((f"witness {label} <= bound {ub}", g <= ub, f"g={g}"))
    for m in (Model.DSO, Model.ODJM):
        for p in (4, 5, 6):
            known = table.get(m, {}).get(p)
            if known is None:
                continue
            got = best.get((m, p))
            checks.append((f"{m.value} p={p} attains {known}", got == known,
                           "no witness" if got is None else f"best witness g={got}"))
    return TableReport(checks)


# ---------------------------------------------------------------------------
# two-sided characterization at p = 4, 5

_CHAR_FAMILIES = {
    (Model.DSO, 4): ("dso-p4",),
    (Model.ODJM, 4): ("odjm-p4",),
    (Model.DSO, 5): ("dso-p5-plus", "dso-p5-minus"),
    (Model.ODJM, 5): ("odjm-p5",),
}


@dataclass
class CharacterizationReport:
    model: Model
    p: int
    forward_total: int = 0
    forward_failures: list = field(default_factory=list)
    converse_total: int = 0
    converse_failures: list = field(default_factory=list)
    max_fit_residual: float = 0.0
    fits: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.forward_failures and not self.converse_failures

    def to_dict(self) -> dict:
        return {"model": self.model.value, "p": self.p, "passed": self.passed,
                "forward_total": self.forward_total, "forward_failures": self.forward_failures,
                "converse_total": self.converse_total,
                "converse_failures": self.converse_failures,
                "max_fit_residual": self.max_fit_residual}


def _free_entries(c: CoefficientVector) -> np.ndarray:
    return np.array([float(x) for x in (c.v if c.model is Model.DSO else c.a)])


def _with_entries(model: Model, x) -> CoefficientVector:
    x = [float(t) for t in x]
    return make_vector(model, v=x) if model is Model.DSO else make_vector(model, a=x)


def project_closed(model: Model, x0: np.ndarray, E: float, sigma: int,
                   max_iter: int = 50) -> np.ndarray:
    """Nearby entries with Phi(E) = sigma * 1, by minimum-norm Gauss-Newton from x0.

    The closed-gap set is a curve through the family, so the Jacobian is rank
    deficient along it; minimum-norm steps keep the iterate from sliding
    along that curve, which a trust-region solver happily does.
    """
    def resid(x):
        m11, m12, m21, m22 = monodromy_product(_with_entries(model, x), E)
        return np.array([m11 - sigma, m12, m21, m22 - sigma])

    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        r = resid(x)
        if np.max(np.abs(r)) <= 1e-15:
            break
        J = np.empty((4, len(x)))
        for i in range(len(x)):
            h = 1e-7 * (1 + abs(x[i]))
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            J[:, i] = (resid(xp) - resid(xm)) / (2 * h)
        # det Phi = 1 makes the four equations rank 3; drop the spurious direction
        step = np.linalg.lstsq(J, -r, rcond=1e-8)[0]
        x = x + step
        if model is Model.ODJM and np.any(x <= 0):
            break
        if np.max(np.abs(step)) <= 1e-16 * (1 + np.max(np.abs(x))):
            break
    return x


def _closed_form(name: str, params: dict) -> np.ndarray | None:
    try:
        inst = make_family(FamilySpec(name, params))
    except ValueError:
        return None
    return _free_entries(inst.vector)


def fit_family(model: Model, p: int, c: CoefficientVector, energy: float,
               sign: int) -> tuple[str, dict, float]:
    """Best closed-form match after shift/scale normalisation and cyclic alignment.

    Returns (family id, fitted parameters, max-norm fit residual).
    """
    if model is Model.DSO:
        # move the gap to 0; the p = 4 form additionally has zero mean
        shift = float(np.mean(_free_entries(c))) if p == 4 else energy
        norm = make_vector(model, v=[float(x) - shift for x in c.v])
    else:
        scale = 1.0 if p == 4 else abs(energy)
        norm = make_vector(model, a=[float(x) / scale for x in c.a])
    best = ("", {}, math.inf)
    for k in range(p):
        x = _free_entries(cyclic_shift(norm, k))
        if (model, p) == (Model.DSO, 4):
            cands = [("dso-p4", {"lambda": x[1]})]
        elif (model, p) == (Model.ODJM, 4):
            cands = [("odjm-p4", {"a1": x[0], "a2": x[1], "a3": x[2]})]
        elif (model, p) == (Model.DSO, 5):
            cands = [("dso-p5-plus" if sign > 0 else "dso-p5-minus",
                      {"lambda": x[0], "eta": x[1]})]
        else:
            cands = [("odjm-p5", {"alpha": x[0], "beta": x[1]})]
        for name, params in cands:
            form = _closed_form(name, params)
            if form is None:
                continue
            res = float(np.max(np.abs(form - x)))
            if res < best[2]:
                best = (name, params, res)
    return best


def _perturb_and_project(model: Model, vector: CoefficientVector, target, rng,
                         perturbation: float, tol: float, attempts: int = 4):
    """Move off a family instance, then project back onto the closed-gap set at ``target``.

    ODJM entries are perturbed multiplicatively so they stay positive and
    small entries are not swamped. A projection that drifts far from the
    seed or fails to re-certify is retried with half the perturbation; that
    is a search failure, not a counterexample.
    """
    x0 = _free_entries(vector)
    c, reason = None, "projection not re-certified"
    for k in range(attempts):
        eps = perturbation / 2 ** k
        noise = rng.standard_normal(len(x0))
        if model is Model.ODJM:
            x1 = x0 * np.exp(eps * noise)
        else:
            x1 = x0 + eps * (1 + np.abs(x0)) * noise
        xs = project_closed(model, x1, target.energy, target.sign)
        if np.max(np.abs(xs - x1)) > 100 * eps * (1 + np.max(np.abs(x0))):
            # slid along the closed-gap set far from the seed instance
            reason = "projection drifted"
            continue
        try:
            c = _with_entries(model, xs)
        except ValueError as exc:
            c, reason = None, str(exc)
            continue
        if not is_irreducible(c):
            return c, [], "reducible"
        found = [ct for ct in closed_gaps_float(c, tol)
                 if ct.sign == target.sign and abs(ct.energy - target.energy) <= 1e-6]
        if found:
            return c, found, ""
    return c, [], reason


def characterization_check(model, p: int, samples: int, seed: int = 0,
                           perturbation: float = 1e-3, fit_tol: float = 1e-6,
                           tol: float = 1e-8) -> CharacterizationReport:
    """Forward and converse test of the p = 4, 5 closed-gap characterizations."""
    model = Model.parse(model)
    if (model, p) not in _CHAR_FAMILIES:
        raise ValueError("characterization_check covers DSO/ODJM with p in {4, 5}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(p, 0 if model is Model.DSO else 1)))
    rep = CharacterizationReport(model, p)
    for name in _CHAR_FAMILIES[(model, p)]:
        for _ in range(samples):
            inst = sample_family(name, rng)
            rep.forward_total += 1
            certs = closed_gaps_float(inst.vector, tol)
            missing = match_predictions(inst.predicted, certs)
            if missing:
                rep.forward_failures.append({"family": name, "vector": vector_to_dict(inst.vector),
                                             "missing": [m.to_dict() for m in missing]})
                continue
            target = inst.predicted[-1]
            rep.converse_total += 1
            c, found, reason = _perturb_and_project(model, inst.vector, target, rng,
                                                    perturbation, tol)
            if reason == "reducible":
                continue
            if not found:
                rep.converse_failures.append({"family": name, "reason": reason,
                                              "vector": None if c is None else vector_to_dict(c)})
                continue
            fname, params, res = fit_family(model, p, c, found[0].energy, found[0].sign)
            rep.max_fit_residual = max(rep.max_fit_residual, res)
            rep.fits.append((fname, params, res))
            if res > fit_tol:
                rep.converse_failures.append({"family": name, "reason": f"fit residual {res:.3g}",
                                              "vector": vector_to_dict(c)})
    return rep


__all__ = [
    "CensusConfig", "CensusResult", "CensusError", "KNOWN_TABLE", "run_census",
    "verify_known_table", "TableReport", "default_witnesses", "upper_bound", "bound_checks",
    "characterization_check", "CharacterizationReport", "fit_family", "project_closed",
    "screen_candidates", "floquet_batch",
]
