from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest

from gapscope.census import (
    KNOWN_TABLE,
    CensusConfig,
    CensusError,
    _run_chunk,
    bound_checks,
    characterization_check,
    default_witnesses,
    fit_family,
    run_census,
    screen_candidates,
    upper_bound,
    verify_known_table,
)
from gapscope.families import FamilySpec, make_family, sample_family
from gapscope.jacobi import Model, make_vector
from gapscope.poly import Backend
from gapscope.spectrum import closed_gaps_exact, closed_gaps_float

F = Fraction


def _witnesses_for(model, p, backend=Backend.FLOAT):
    return [w for w in default_witnesses() if w.vector.model is model and w.vector.p == p]


# --- config -----------------------------------------------------------------

@pytest.mark.parametrize("kw", [{"n": 0}, {"p": 0}, {"R": 0}, {"a_range": (0, 1)}, {"tol": 0}])
def test_config_validation(kw):
    base = dict(model="dso", p=3, n=10)
    base.update(kw)
    with pytest.raises(ValueError):
        CensusConfig(**base)


# --- run_census -------------------------------------------------------------

def test_dso_p3_is_gapless():
    res = run_census(CensusConfig("dso", 3, 1000, seed=1))
    assert res.histogram == {0: 1000} and res.max_found == 0 and res.passed


def test_dso_p1():
    assert run_census(CensusConfig("dso", 1, 10)).histogram == {0: 10}


def test_odjm_p5_injection_raises_max_found():
    cfg = CensusConfig("odjm", 5, 1000, seed=2)
    plain = run_census(cfg)
    assert plain.max_found == 0
    inj = run_census(cfg, _witnesses_for(Model.ODJM, 5))
    assert inj.max_found == 2 and inj.passed
    assert inj.histogram == plain.histogram
    assert inj.bound_check["odd_parity"]


@pytest.mark.parametrize("model", ["dso", "odjm", "jac"])
def test_exact_small_periods_have_no_closed_gaps(model):
    for p in (2, 3):
        res = run_census(CensusConfig(model, p, 200, seed=3, backend=Backend.EXACT))
        assert res.histogram == {0: 200}


def test_determinism_and_thread_independence(monkeypatch):
    cfg = CensusConfig("jac", 4, 1500, seed=9)
    monkeypatch.setenv("GAPSCOPE_THREADS", "1")
    one = json.dumps(run_census(cfg).to_dict(), sort_keys=True)
    assert one == json.dumps(run_census(cfg).to_dict(), sort_keys=True)
    monkeypatch.setenv("GAPSCOPE_THREADS", "3")
    assert one == json.dumps(run_census(cfg).to_dict(), sort_keys=True)


def test_seed_changes_samples():
    _, _, a = _run_chunk(CensusConfig("dso", 2, 5, seed=0), 0, 5)
    _, _, b = _run_chunk(CensusConfig("dso", 2, 5, seed=1), 0, 5)
    _, _, c = _run_chunk(CensusConfig("dso", 2, 5, seed=0), 0, 5)
    assert a == c and a != b


def test_reducible_draws_are_rejected():
    # a one-point box only produces constant, hence reducible, vectors
    with pytest.raises(CensusError):
        run_census(CensusConfig("odjm", 2, 3, a_range=(1.0, 1.0)))


def test_injected_witness_must_match():
    with pytest.raises(ValueError):
        run_census(CensusConfig("dso", 5, 5), _witnesses_for(Model.DSO, 4))


def test_monotone_evidence():
    cfg = CensusConfig("dso", 6, 300, seed=4)
    plain = run_census(cfg)
    w = _witnesses_for(Model.DSO, 6)
    assert run_census(cfg, w).max_found >= plain.max_found
    assert run_census(cfg, []).max_found <= run_census(cfg, w).max_found


def test_witness_storage_is_capped():
    cfg = CensusConfig("dso", 4, 5)
    inst = make_family(FamilySpec("dso-p4", {"lambda": 5.0}))
    res = run_census(cfg, [inst] * 15)
    assert len(res.witnesses[1]) == 10


# --- screening --------------------------------------------------------------

def test_screen_flags_family_witnesses():
    rng = np.random.default_rng(0)
    for name in ("dso-p4", "dso-p5-plus", "odjm-p4", "odjm-p5", "dso-p6", "odjm-p6"):
        rows = [sample_family(name, rng).vector for _ in range(20)]
        A = np.array([[float(x) for x in c.a] for c in rows])
        V = np.array([[float(x) for x in c.v] for c in rows])
        assert screen_candidates(A, V).all(), name


def test_screen_catches_anything_the_certifier_accepts():
    # nudge a witness until the residual sits just below the tolerance
    rng = np.random.default_rng(1)
    certified = 0
    for _ in range(20):
        lam = rng.uniform(0.5, 3)
        eps = 10 ** rng.uniform(-12, -9)
        c = make_vector("dso", v=[0, lam + eps, 0, -lam])
        if closed_gaps_float(c, 1e-8):
            certified += 1
            assert screen_candidates(np.ones((1, 4)), np.array([c.v], dtype=float))[0]
    assert certified >= 10


# --- bounds and table -------------------------------------------------------

@pytest.mark.parametrize("model, p, ub", [
    (Model.ODJM, 5, 2), (Model.DSO, 5, 2), (Model.DSO, 6, 4), (Model.DSO, 8, 5),
    (Model.JAC, 6, 4), (Model.DSO, 2, 0), (Model.DSO, 1, 0),
])
def test_upper_bound(model, p, ub):
    assert upper_bound(model, p) == ub


def test_dso_p8_witness_within_bound():
    w = make_family(FamilySpec("dso-p8", {"lambda": F(1)}), Backend.EXACT)
    assert len(closed_gaps_exact(w.vector)) == 3
    assert all(bound_checks(Model.DSO, 8, [3]).values())


def test_odd_odjm_parity_check():
    assert not bound_checks(Model.ODJM, 5, [1])["odd_parity"]


def _table_results(seed=0):
    out = []
    for model in (Model.DSO, Model.ODJM):
        for p in range(2, 7):
            out.append(run_census(CensusConfig(model, p, 200, seed=seed)))
    return out


def test_known_table_passes():
    rep = verify_known_table(_table_results(), default_witnesses())
    assert rep.passed, [c for c in rep.checks if not c[1]]
    assert KNOWN_TABLE[Model.DSO] == {1: 0, 2: 0, 3: 0, 4: 1, 5: 1, 6: 2}
    assert KNOWN_TABLE[Model.ODJM] == {1: 0, 2: 0, 3: 0, 4: 1, 5: 2, 6: 3}


def test_corrupted_table_fails():
    table = {m: dict(t) for m, t in KNOWN_TABLE.items()}
    table[Model.ODJM][5] = 1
    rep = verify_known_table(_table_results(), default_witnesses(), table)
    assert not rep.passed
    failed = [name for name, ok, _ in rep.checks if not ok]
    assert any("odjm p=5" in n or "odjm-p5" in n for n in failed)


def test_missing_witness_is_reported():
    rep = verify_known_table([], [w for w in default_witnesses() if w.spec.id != "dso-p6"])
    assert not rep.passed


# --- characterization -------------------------------------------------------

def test_fit_perturbed_p4_witness():
    c = make_vector("dso", v=[0.0, 5.001, 0.0, -5.001])
    assert closed_gaps_float(c, 1e-8)
    name, params, res = fit_family(Model.DSO, 4, c, 0.0, 1)
    assert name == "dso-p4" and abs(params["lambda"] - 5.001) <= 1e-12 and res <= 1e-12


def test_fit_p5_minus_zero_witness():
    c = make_vector("dso", v=[0.0, 0.0, 1.0, 1.0, 1.0])
    (ct,) = closed_gaps_float(c, 1e-8)
    name, params, res = fit_family(Model.DSO, 5, c, ct.energy, ct.sign)
    assert name == "dso-p5-minus" and res <= 1e-9
    assert abs(params["lambda"]) <= 1e-9 and abs(params["eta"]) <= 1e-9


def test_fit_odjm_p4_witness():
    c = make_vector("odjm", a=[1.0, 2.0, 2.0, 1.0])
    assert c.a[0] * c.a[2] - c.a[1] * c.a[3] == 0
    _, _, res = fit_family(Model.ODJM, 4, c, 0.0, 1)
    assert res <= 1e-12


@pytest.mark.parametrize("model, p", [("dso", 4), ("odjm", 4), ("dso", 5), ("odjm", 5)])
def test_characterization_round_trip(model, p):
    rep = characterization_check(model, p, samples=8, seed=5)
    assert rep.passed, rep.to_dict()
    assert rep.forward_total >= 8 and rep.converse_total >= 1
    assert rep.max_fit_residual <= 1e-6


def test_characterization_rejects_other_periods():
    with pytest.raises(ValueError):
        characterization_check("dso", 6, 2)
