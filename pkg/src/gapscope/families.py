"""Explicit coefficient families with known closed gaps.

Every constructor returns the vector together with the closed gaps it is
known to have.  Families whose entries involve square roots exist only on the
float backend; asking for them exactly raises :class:`IrrationalFamily`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .jacobi import (
    CoefficientVector,
    Model,
    concatenate,
    cyclic_shift,
    discriminant,
    is_irreducible,
    make_vector,
    monodromy_numeric,
    monodromy_product,
)
from .poly import (
    Backend,
    Polynomial,
    isolate_real_roots,
    rational_root_in,
    squarefree_part,
    to_fraction,
)


class FamilyError(ValueError):
    """Parameters outside a family's domain, or a reducible instance."""


class IrrationalFamily(FamilyError):
    """The family needs square roots and cannot be built exactly."""


@dataclass(frozen=True)
class Prediction:
    energy: float
    sign: int
    value: Fraction | None = None
    factor: Polynomial | None = None

    def to_dict(self) -> dict:
        d = {"energy": str(self.value) if self.value is not None else self.energy,
             "energy_approx": self.energy, "sign": self.sign}
        if self.factor is not None:
            d["factor"] = [str(x) for x in self.factor.coeffs]
        return d


@dataclass(frozen=True)
class FamilySpec:
    id: str
    params: Mapping = field(default_factory=dict)
    p: int | None = None


@dataclass(frozen=True)
class FamilyInstance:
    vector: CoefficientVector
    predicted: tuple
    spec: FamilySpec | None = None


@dataclass(frozen=True)
class FamilyDef:
    name: str
    model: Model
    params: tuple
    domain: str
    source: str
    rational: bool
    period: int | None  # None: the caller chooses p
    build: Callable
    sample: Callable


# ---------------------------------------------------------------------------
# helpers

def _num(x, backend: Backend):
    if backend is Backend.EXACT:
        if isinstance(x, float):
            raise FamilyError(f"exact families need rational parameters, got float {x!r}")
        return to_fraction(x)
    return float(x)


def _pred(E, sign: int) -> Prediction:
    if isinstance(E, Fraction) or isinstance(E, int):
        return Prediction(float(E), sign, Fraction(E))
    return Prediction(float(E), sign)


def _sqrt(x: float) -> float:
    if x <= 0:
        raise FamilyError("square root of a non-positive quantity; parameters out of domain")
    return math.sqrt(x)


def _scalar_sign(c: CoefficientVector, E, tol: float = 1e-8) -> int:
    """sigma with Phi(E) = sigma * 1, computed on c's backend."""
    if c.backend is Backend.EXACT:
        m = monodromy_numeric(c, E)
        for sigma in (1, -1):
            if m.max_dev_from_scalar(sigma) == 0:
                return sigma
        raise FamilyError(f"construction does not close the gap at {E}")
    m11, m12, m21, m22 = monodromy_product(c, float(E))
    for sigma in (1, -1):
        if max(abs(m11 - sigma), abs(m12), abs(m21), abs(m22 - sigma)) <= tol:
            return sigma
    raise FamilyError(f"construction does not close the gap at {E}")


def _zeros(p, backend):
    return [_num(0, backend)] * p


def _rat(rng: np.random.Generator, lo: float, hi: float, exact: bool, den: int = 24):
    x = rng.uniform(lo, hi)
    if exact:
        return Fraction(round(x * den), den)
    return float(x)


def _nonzero(rng, exact, lo=0.25, hi=5.0):
    x = _rat(rng, lo, hi, exact)
    return x if rng.integers(2) else -x


# ---------------------------------------------------------------------------
# builders; each returns (model, a, v, predictions)

def _dso_p4(params, p, be):
    lam = _num(params["lambda"], be)
    if lam == 0:
        raise FamilyError("dso-p4 needs lambda != 0")
    z = _num(0, be)
    return Model.DSO, None, [z, lam, z, -lam], [_pred(z, 1)]


def _odjm_p4(params, p, be):
    a1, a2, a3 = (_num(params[k], be) for k in ("a1", "a2", "a3"))
    if min(a1, a2, a3) <= 0:
        raise FamilyError("odjm-p4 needs positive a1, a2, a3")
    return Model.ODJM, [a1, a2, a3, a1 * a3 / a2], None, [_pred(_num(0, be), 1)]


def _dso_p5(sign):
    def build(params, p, be):
        lam, eta = _num(params["lambda"], be), _num(params["eta"], be)
        d = lam * eta - 1
        if d == 0:
            raise FamilyError("dso-p5 needs lambda*eta != 1")
        if sign > 0:
            v = [lam, eta, (lam + 1) / d, d, (eta + 1) / d]
        else:
            v = [lam, eta, (lam - 1) / d, -d, (eta - 1) / d]
        return Model.DSO, None, v, [_pred(_num(0, be), sign)]
    return build


def _odjm_p5(params, p, be):
    if be is Backend.EXACT:
        raise IrrationalFamily("odjm-p5 involves square roots; use the float backend")
    al, bt = float(params["alpha"]), float(params["beta"])
    inner = al > 1 and bt > 1
    outer = al > 0 and bt > 0 and al * al + bt * bt < 1
    if not (inner or outer):
        raise FamilyError("odjm-p5 needs alpha, beta > 1 or alpha^2 + beta^2 < 1 (both positive)")
    s = al * al + bt * bt - 1
    a = [al, bt, _sqrt(s / (al * al - 1)), al * bt / _sqrt((al * al - 1) * (bt * bt - 1)),
         _sqrt(s / (bt * bt - 1))]
    sg = 1 if inner else -1
    return Model.ODJM, a, None, [_pred(-1.0, -sg), _pred(1.0, sg)]


def _dso_p6(params, p, be):
    x = _num(params["a"], be)
    if x == 0:
        raise FamilyError("dso-p6 needs a != 0")
    z = _num(0, be)
    one = _num(1, be)
    return Model.DSO, None, [x, z, z, -x, z, z], [_pred(-one, 1), _pred(one, 1)]


def _odjm_p6(params, p, be):
    if be is Backend.EXACT:
        raise IrrationalFamily("odjm-p6 involves square roots; use the float backend")
    al, bt = float(params["alpha"]), float(params["beta"])
    if not (al > 1 / math.sqrt(2) and bt > 1 / math.sqrt(2)):
        raise FamilyError("odjm-p6 needs alpha, beta > 1/sqrt(2)")
    s = al * al + bt * bt - 1
    a = [al, bt, _sqrt(s / (2 * al * al - 1)), al / _sqrt(2 * al * al - 1),
         bt / _sqrt(2 * bt * bt - 1), _sqrt(s / (2 * bt * bt - 1))]
    return Model.ODJM, a, None, [_pred(-1.0, 1), _pred(0.0, -1), _pred(1.0, 1)]


def _dso_p8(params, p, be):
    lam = _num(params["lambda"], be)
    if lam == 0:
        raise FamilyError("dso-p8 needs lambda != 0")
    z = _num(0, be)
    v = [z, z, z, lam, z, z, z, -lam]
    r2 = math.sqrt(2)
    quad = Polynomial((Fraction(-2), Fraction(0), Fraction(1)))
    preds = [Prediction(-r2, 1, None, quad), _pred(z, 1), Prediction(r2, 1, None, quad)]
    return Model.DSO, None, v, preds


def _spike(even: bool):
    def build(params, p, be):
        if even and (p is None or p % 2 or p < 8):
            raise FamilyError("dso-even-spike needs an even period p >= 8")
        if not even and (p is None or p % 2 == 0 or p < 7):
            raise FamilyError("dso-odd-spike needs an odd period p >= 7")
        head = [1, 1, 1, -1, -1, -1] if even else [1, 1, 1]
        v = [_num(x, be) for x in head] + _zeros(p - len(head), be)
        exact = make_vector(Model.DSO, v=[Fraction(x) for x in head] + [Fraction(0)] * (p - len(head)),
                            backend=Backend.EXACT)
        sign = _scalar_sign(exact, Fraction(0))
        return Model.DSO, None, v, [_pred(_num(0, be), sign)]
    return build


def _odjm_even_balanced(params, p, be):
    if p is None or p % 2 or p < 4:
        raise FamilyError("odjm-even-balanced needs an even period p >= 4")
    a = [_num(params.get(f"a{j}", j), be) for j in range(1, p)]
    if min(a) <= 0:
        raise FamilyError("odjm-even-balanced needs positive entries")
    odd = math.prod(a[0::2])  # a1 a3 ... a_{p-1}
    even = math.prod(a[1::2])  # a2 a4 ... a_{p-2}
    a.append(odd / even)
    return Model.ODJM, a, None, [_pred(_num(0, be), (-1) ** (p // 2))]


def _odjm_mod4(residue: int):
    def build(params, p, be):
        lo = 7 if residue == 3 else 5
        if p is None or p % 4 != residue or p < lo:
            raise FamilyError(f"odjm-{residue}mod4 needs p = {residue} mod 4, p >= {lo}")
        if be is Backend.EXACT:
            raise IrrationalFamily(f"odjm-{residue}mod4 involves square roots; use the float backend")
        if residue == 3:
            a = [1.0, 1.0, 1.0] + [1 / math.sqrt(2)] * (p - 3)
        else:
            a = [2.0, 3.0, 2.0, math.sqrt(1.5), math.sqrt(1.5)] + [1 / math.sqrt(2)] * (p - 5)
        c = make_vector(Model.ODJM, a=a)
        return Model.ODJM, a, None, [_pred(-1.0, _scalar_sign(c, -1.0)), _pred(1.0, _scalar_sign(c, 1.0))]
    return build


# ---------------------------------------------------------------------------
# samplers: rng, exact -> (params, p)

def _s_dso_p4(rng, exact):
    return {"lambda": _nonzero(rng, exact)}, 4


def _s_odjm_p4(rng, exact):
    return {k: _rat(rng, 0.25, 4.0, exact) for k in ("a1", "a2", "a3")}, 4


def _s_dso_p5(rng, exact):
    return {"lambda": _rat(rng, -4, 4, exact), "eta": _rat(rng, -4, 4, exact)}, 5


def _s_odjm_p5(rng, exact):
    if rng.integers(2):
        return {"alpha": rng.uniform(1.1, 4), "beta": rng.uniform(1.1, 4)}, 5
    r, t = rng.uniform(0.2, 0.95), rng.uniform(0.15, math.pi / 2 - 0.15)
    return {"alpha": r * math.cos(t), "beta": r * math.sin(t)}, 5


def _s_dso_p6(rng, exact):
    return {"a": _nonzero(rng, exact)}, 6


def _s_odjm_p6(rng, exact):
    return {"alpha": rng.uniform(0.75, 4), "beta": rng.uniform(0.75, 4)}, 6


def _s_dso_p8(rng, exact):
    return {"lambda": _nonzero(rng, exact)}, 8


def _s_spike(even):
    return lambda rng, exact: ({}, int(rng.choice([8, 10, 12] if even else [7, 9, 11])))


def _s_balanced(rng, exact):
    p = int(rng.choice([4, 6, 8]))
    return {f"a{j}": _rat(rng, 0.25, 4.0, exact) for j in range(1, p)}, p


def _s_mod4(residue):
    return lambda rng, exact: ({}, int(rng.choice([7, 11] if residue == 3 else [5, 9, 13])))


FAMILIES: dict[str, FamilyDef] = {}


def _register(*args):
    d = FamilyDef(*args)
    FAMILIES[d.name] = d


_register("dso-p4", Model.DSO, ("lambda",), "lambda != 0", "potential (0, lambda, 0, -lambda)",
          True, 4, _dso_p4, _s_dso_p4)
_register("odjm-p4", Model.ODJM, ("a1", "a2", "a3"), "a1, a2, a3 > 0; a4 = a1*a3/a2",
          "hoppings with a1*a3 = a2*a4", True, 4, _odjm_p4, _s_odjm_p4)
_register("dso-p5-plus", Model.DSO, ("lambda", "eta"), "lambda*eta != 1, instance irreducible",
          "(lambda, eta, (lambda+1)/d, d, (eta+1)/d) with d = lambda*eta - 1", True, 5,
          _dso_p5(1), _s_dso_p5)
_register("dso-p5-minus", Model.DSO, ("lambda", "eta"), "lambda*eta != 1, instance irreducible",
          "(lambda, eta, (lambda-1)/d, -d, (eta-1)/d) with d = lambda*eta - 1", True, 5,
          _dso_p5(-1), _s_dso_p5)
_register("odjm-p5", Model.ODJM, ("alpha", "beta"), "alpha, beta > 1, or alpha^2 + beta^2 < 1",
          "two-parameter hoppings closing the gaps at +1 and -1", False, 5, _odjm_p5, _s_odjm_p5)
_register("dso-p6", Model.DSO, ("a",), "a != 0", "potential (a, 0, 0, -a, 0, 0)",
          True, 6, _dso_p6, _s_dso_p6)
_register("odjm-p6", Model.ODJM, ("alpha", "beta"), "alpha, beta > 1/sqrt(2)",
          "two-parameter hoppings closing the gaps at -1, 0, +1", False, 6, _odjm_p6, _s_odjm_p6)
_register("dso-p8", Model.DSO, ("lambda",), "lambda != 0",
          "potential (0, 0, 0, lambda, 0, 0, 0, -lambda)", True, 8, _dso_p8, _s_dso_p8)
_register("dso-odd-spike", Model.DSO, (), "p odd, p >= 7", "potential (1, 1, 1, 0, ..., 0)",
          True, None, _spike(False), _s_spike(False))
_register("dso-even-spike", Model.DSO, (), "p even, p >= 8",
          "potential (1, 1, 1, -1, -1, -1, 0, ..., 0)", True, None, _spike(True), _s_spike(True))
_register("odjm-even-balanced", Model.ODJM, (),
          "p even >= 4, a_j > 0 (default a_j = j); a_p balances odd and even products",
          "hoppings with a1 a3 ... a_{p-1} = a2 a4 ... a_p", True, None,
          _odjm_even_balanced, _s_balanced)
_register("odjm-3mod4", Model.ODJM, (), "p = 3 mod 4, p >= 7",
          "hoppings (1, 1, 1, 1/sqrt2, ..., 1/sqrt2)", False, None, _odjm_mod4(3), _s_mod4(3))
_register("odjm-1mod4", Model.ODJM, (), "p = 1 mod 4, p >= 5",
          "hoppings (2, 3, 2, sqrt(3/2), sqrt(3/2), 1/sqrt2, ..., 1/sqrt2)", False, None,
          _odjm_mod4(1), _s_mod4(1))


def _nearly_reducible(c: CoefficientVector, rtol: float = 1e-12) -> bool:
    """Float instances that differ from a reducible one only by rounding."""
    if c.backend is Backend.EXACT:
        return False
    x = np.array([float(t) for t in c.a + c.v])
    scale = 1.0 + float(np.max(np.abs(x)))
    p = c.p
    for d in range(1, p):
        if p % d == 0:
            a = np.array([float(t) for t in c.a])
            v = np.array([float(t) for t in c.v])
            dev = max(np.max(np.abs(np.roll(a, d) - a)), np.max(np.abs(np.roll(v, d) - v)))
            if dev <= rtol * scale:
                return True
    return False


def family_names() -> list[str]:
    return list(FAMILIES)


def make_family(spec: FamilySpec, backend: Backend | str = Backend.FLOAT) -> FamilyInstance:
    """Build a family instance and attach its predicted closed gaps."""
    backend = Backend(backend)
    try:
        fam = FAMILIES[spec.id]
    except KeyError:
        raise FamilyError(f"unknown family {spec.id!r}; known: {', '.join(FAMILIES)}") from None
    p = spec.p
    if fam.period is not None:
        if p is not None and p != fam.period:
            raise FamilyError(f"{fam.name} has fixed period {fam.period}, got p={p}")
        p = fam.period
    missing = [k for k in fam.params if k not in spec.params]
    if missing:
        raise FamilyError(f"{fam.name} needs parameters {', '.join(missing)}")
    if not fam.rational and backend is Backend.EXACT:
        raise IrrationalFamily(f"{fam.name} involves square roots; use the float backend")
    model, a, v, preds = fam.build(spec.params, p, backend)
    try:
        vec = make_vector(model, a=a, v=v, backend=backend)
    except ValueError as exc:
        raise FamilyError(str(exc)) from None
    if not is_irreducible(vec) or _nearly_reducible(vec):
        raise FamilyError(f"{fam.name} with {dict(spec.params)} is reducible")
    return FamilyInstance(vec, tuple(sorted(preds, key=lambda z: z.energy)), spec)


def sample_family(name: str, rng: np.random.Generator, backend: Backend | str = Backend.FLOAT,
                  tries: int = 1000) -> FamilyInstance:
    """A random in-domain instance of ``name``."""
    fam = FAMILIES[name]
    exact = Backend(backend) is Backend.EXACT
    for _ in range(tries):
        params, p = fam.sample(rng, exact)
        try:
            return make_family(FamilySpec(name, params, p), backend)
        except IrrationalFamily:
            raise
        except FamilyError:
            continue
    raise FamilyError(f"no in-domain sample of {name} after {tries} draws")


def double_construct(base: CoefficientVector, k: int) -> FamilyInstance:
    """w = v^k cyc(v)^k together with its predicted closed gaps.

    The base's closed gaps persist, and every solution of
    D_base(E) = 2 cos(pi j / k), 1 <= j < k, becomes a closed gap with
    Phi_w(E) = 1.
    """
    from .spectrum import band_function, band_structure

    if k < 2:
        raise FamilyError("double_construct needs k >= 2")
    if not is_irreducible(base):
        raise FamilyError("double_construct needs an irreducible base")
    w = base
    for _ in range(k - 1):
        w = concatenate(w, base)
    shifted = cyclic_shift(base, 1)
    for _ in range(k):
        w = concatenate(w, shifted)
    if not is_irreducible(w):
        raise FamilyError("doubled vector came out reducible")

    rep = band_structure(base)
    preds = [Prediction(ct.energy, 1, ct.value, ct.factor) for ct in rep.closed_gaps]
    exact = base.backend is Backend.EXACT
    dpoly = discriminant(base).poly if exact else None
    # 2 cos(pi j / k) is rational only for j/k in {1/2, 1/3, 2/3}
    rational_levels = {Fraction(1, 2): 0, Fraction(1, 3): 1, Fraction(2, 3): -1}
    for j in range(1, k):
        theta = j / (2 * k)
        level = rational_levels.get(Fraction(j, k))
        if dpoly is None or level is None:
            preds += [Prediction(E, 1) for E in band_function(base, theta, rep)]
            continue
        q = squarefree_part(dpoly - Polynomial.constant(Fraction(level)))
        approx = band_function(base, theta, rep)
        for br in isolate_real_roots(q):
            r = rational_root_in(q, br)
            if r is not None:
                preds.append(Prediction(float(r), 1, r))
                continue
            near = [E for E in approx if float(br.lo) - 1e-9 <= E <= float(br.hi) + 1e-9]
            if len(near) != 1:
                raise FamilyError("could not match a doubling prediction to its exact root")
            preds.append(Prediction(near[0], 1, None, q))
    preds.sort(key=lambda z: z.energy)
    return FamilyInstance(w, tuple(preds))


def match_predictions(predicted, certificates, tol: float = 1e-9) -> list[Prediction]:
    """Predictions not matched by a certificate of the same sign within ``tol``.

    When both sides carry exact rational energies they must agree exactly.
    """
    missing = []
    for pr in predicted:
        ok = False
        for ct in certificates:
            if ct.sign != pr.sign:
                continue
            if pr.value is not None and getattr(ct, "value", None) is not None:
                ok = pr.value == ct.value
            else:
                ok = abs(ct.energy - pr.energy) <= tol
            if ok:
                break
        if not ok:
            missing.append(pr)
    return missing


def normalize_params(params: Mapping, backend: Backend) -> dict:
    """Parse ``name=value`` strings into backend scalars (used by the CLI)."""
    out = {}
    for k, val in params.items():
        if backend is Backend.EXACT:
            out[k] = to_fraction(val)
        else:
            out[k] = float(Fraction(val)) if isinstance(val, str) and "/" in val else float(val)
    return out


__all__ = [
    "FamilyError", "IrrationalFamily", "Prediction", "FamilySpec", "FamilyInstance", "FamilyDef",
    "FAMILIES", "family_names", "make_family", "sample_family", "double_construct",
    "match_predictions", "normalize_params",
]
