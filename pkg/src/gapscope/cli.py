"""Command-line interface: ``gapscope <command> [options]``.

Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

from .census import DEFAULT_WITNESSES, KNOWN_TABLE, CensusConfig, run_census
from .families import (
    FAMILIES,
    FamilyError,
    FamilySpec,
    double_construct,
    make_family,
    match_predictions,
)
from .jacobi import Model, VectorError, make_vector, vector_from_dict, vector_to_dict
from .poly import Backend, PolynomialError
from .report import band_svg, census_csv, rows_csv, spectrum_csv
from .spectrum import NumericalError, band_structure, closed_gaps
from .verify import format_report, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")


class UsageError(ValueError):
    pass


def parse_literal(text: str, exact: bool):
    """Parse one CLI scalar: integers and "num/den" always, decimals only for float."""
    text = text.strip()
    if exact:
        if not _RATIONAL.match(text):
            raise UsageError(f"--exact needs integer or num/den literals, got {text!r}")
        value = Fraction(text)
        return value
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def parse_list(text: str | None, exact: bool):
    if text is None:
        return None
    return [parse_literal(t, exact) for t in text.split(",") if t.strip()]


def parse_params(text: str | None, exact: bool) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"parameters are key=value pairs, got {item!r}")
        k, val = item.split("=", 1)
        out[k.strip()] = parse_literal(val, exact)
    return out


def _add_vector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="vector JSON file (or a report containing 'vector'); '-' reads stdin")
    p.add_argument("--model", choices=[m.value for m in Model], help="jac, dso or odjm")
    p.add_argument("--a", help="comma-separated off-diagonal entries")
    p.add_argument("--v", help="comma-separated diagonal entries")
    p.add_argument("--exact", action="store_true", help="exact rational backend")


def _read_vector(args):
    if args.input:
        text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text("utf-8")
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad JSON input: {exc}") from None
        if isinstance(d, dict) and "vector" in d:
            d = d["vector"]
        c = vector_from_dict(d)
        if args.exact and c.backend is not Backend.EXACT:
            raise UsageError("--exact given but the input vector is a float vector")
        return c
    if args.model is None:
        raise UsageError("give --input or --model with --a/--v")
    backend = Backend.EXACT if args.exact else Backend.FLOAT
    return make_vector(args.model, parse_list(args.a, args.exact), parse_list(args.v, args.exact),
                       backend)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


# ---------------------------------------------------------------------------
# commands

def cmd_spectrum(args) -> int:
    c = _read_vector(args)
    rep = band_structure(c, args.tol)
    d = rep.to_dict()
    if args.format == "csv":
        sys.stdout.write(spectrum_csv(d))
    else:
        _emit({"vector": vector_to_dict(c), **d})
    if args.svg:
        Path(args.svg).write_text(band_svg(rep, f"{c.model.value} p={c.p}"), encoding="utf-8")
    return EXIT_OK


def cmd_closed_gaps(args) -> int:
    c = _read_vector(args)
    certs = closed_gaps(c, args.tol)
    rows = [ct.to_dict() for ct in certs]
    if args.format == "csv":
        cols = ["energy", "energy_approx", "sign", "residual", "gap_index", "exact"]
        sys.stdout.write(rows_csv(rows, cols))
    else:
        _emit({"vector": vector_to_dict(c), "closed_gaps": rows, "g": len(rows)})
    return EXIT_OK


def _analysis(vector, predicted, tol) -> dict:
    rep = band_structure(vector, tol)
    missing = match_predictions(predicted, rep.closed_gaps)
    return {"g": rep.g, "closed_gaps": [ct.to_dict() for ct in rep.closed_gaps],
            "certified": not missing, "uncertified": [m.to_dict() for m in missing]}


def cmd_family(args) -> int:
    if args.list:
        _emit([{"name": f.name, "model": f.model.value, "params": list(f.params),
                "period": f.period, "domain": f.domain, "construction": f.source,
                "exact": f.rational} for f in FAMILIES.values()])
        return EXIT_OK
    if not args.name:
        raise UsageError("family needs --name (or --list)")
    backend = Backend.EXACT if args.exact else Backend.FLOAT
    inst = make_family(FamilySpec(args.name, parse_params(args.params, args.exact), args.p), backend)
    out = {"family": args.name, "vector": vector_to_dict(inst.vector),
           "predicted": [pr.to_dict() for pr in inst.predicted]}
    if args.analyze:
        out["analysis"] = _analysis(inst.vector, inst.predicted, args.tol)
    _emit(out)
    return EXIT_OK if not args.analyze or out["analysis"]["certified"] else EXIT_VERIFY


def cmd_double(args) -> int:
    base = _read_vector(args)
    inst = double_construct(base, args.k)
    out = {"base": vector_to_dict(base), "k": args.k, "vector": vector_to_dict(inst.vector),
           "predicted": [pr.to_dict() for pr in inst.predicted]}
    if args.analyze:
        out["analysis"] = _analysis(inst.vector, inst.predicted, args.tol)
    _emit(out)
    return EXIT_OK if not args.analyze or out["analysis"]["certified"] else EXIT_VERIFY


def cmd_census(args) -> int:
    backend = Backend.EXACT if args.exact else Backend.FLOAT
    cfg = CensusConfig(args.model, args.p, args.n, args.seed, backend=backend, tol=args.tol)
    inject = []
    if args.inject:
        inject = [make_family(s, backend) for s in DEFAULT_WITNESSES
                  if FAMILIES[s.id].model is cfg.model and FAMILIES[s.id].period == cfg.p
                  and (FAMILIES[s.id].rational or backend is Backend.FLOAT)]
    res = run_census(cfg, inject)
    d = res.to_dict()
    if args.format == "csv":
        sys.stdout.write(census_csv(d))
    else:
        _emit(d)
    return EXIT_OK if res.passed else EXIT_VERIFY


def _load_table(path: str | None) -> dict:
    table = {m: dict(t) for m, t in KNOWN_TABLE.items()}
    if path is None:
        return table
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
        for model, entries in raw.items():
            table.setdefault(Model.parse(model), {}).update(
                {int(p): int(g) for p, g in entries.items()})
    except (OSError, ValueError, AttributeError) as exc:
        raise UsageError(f"bad table file: {exc}") from None
    return table


def cmd_verify(args) -> int:
    results = run_suite(args.seed, _load_table(args.table))
    sys.stdout.write(format_report(results, args.seed))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapscope",
                                     description="Band structure and closed spectral gaps of "
                                                 "periodic Jacobi matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="bands, gaps and closed-gap certificates")
    _add_vector_args(sp)
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--svg", help="write a band diagram to this path")
    sp.add_argument("--tol", type=float, default=1e-8, help="float closed-gap residual tolerance")
    sp.set_defaults(func=cmd_spectrum)

    cg = sub.add_parser("closed-gaps", help="closed-gap certificates only")
    _add_vector_args(cg)
    cg.add_argument("--format", choices=["json", "csv"], default="json")
    cg.add_argument("--tol", type=float, default=1e-8)
    cg.set_defaults(func=cmd_closed_gaps)

    fp = sub.add_parser("family", help="build a named closed-gap family")
    fp.add_argument("--name", choices=list(FAMILIES))
    fp.add_argument("--params", help="key=value pairs, e.g. lambda=2,eta=3")
    fp.add_argument("--p", type=int, help="period for families with a free period")
    fp.add_argument("--exact", action="store_true")
    fp.add_argument("--analyze", action="store_true", help="certify the predicted gaps")
    fp.add_argument("--list", action="store_true", help="list registered families")
    fp.add_argument("--tol", type=float, default=1e-8)
    fp.set_defaults(func=cmd_family)

    dp = sub.add_parser("double", help="w = v^k cyc(v)^k with predicted closed gaps")
    _add_vector_args(dp)
    dp.add_argument("--k", type=int, default=2)
    dp.add_argument("--analyze", action="store_true")
    dp.add_argument("--tol", type=float, default=1e-8)
    dp.set_defaults(func=cmd_double)

    cp = sub.add_parser("census", help="seeded random closed-gap census")
    cp.add_argument("--model", choices=[m.value for m in Model], required=True)
    cp.add_argument("--p", type=int, required=True)
    cp.add_argument("--n", type=int, default=1000)
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("--exact", action="store_true")
    cp.add_argument("--tol", type=float, default=1e-8)
    cp.add_argument("--inject", action="store_true",
                    help="add the built-in family witnesses for this model and period")
    cp.add_argument("--format", choices=["json", "csv"], default="json")
    cp.set_defaults(func=cmd_census)

    vp = sub.add_parser("verify", help="run the reference verification suite")
    vp.add_argument("--suite", choices=["paper"], default="paper")
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--table", help="JSON file overriding known closed-gap counts")
    vp.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"gapscope: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, FamilyError, VectorError, PolynomialError, ValueError) as exc:
        print(f"gapscope: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gapscope: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
