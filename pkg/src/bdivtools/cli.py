"""Command-line front end.

Exit status: 0 on success, 2 when the answer is a certified negative result
(NOT_CARTIER, NOT_PL, a failed admissibility check), 1 on errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import asymdim, convexrec, gradedseries, plconical, siegelcones
from .exactnum import rational_from_str, rational_to_str

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(path: str):
    with open(path) as fh:
        return json.load(fh)


def _vector(s: str) -> tuple:
    try:
        return tuple(rational_from_str(t.strip()) for t in s.split(",") if t.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise UsageError(f"bad vector {s!r}: {e}") from e


def _pairs(s: str) -> list[tuple[int, int]]:
    out = []
    for chunk in s.split(";"):
        if chunk.strip():
            a, b = chunk.split(",")
            out.append((int(a), int(b)))
    return out


def _pl_function(args) -> plconical.PLConicalFunction:
    pl = _load(args.pl)
    if "fan" not in pl:
        if args.fan is None:
            raise UsageError("--fan is required unless the PL file embeds its fan")
        pl = dict(pl, fan=_load(args.fan))
    return plconical.PLConicalFunction.from_json(pl)


def _decomposition(source: str, g: int | None = None) -> siegelcones.AdmissibleDecomposition:
    if source == "standard":
        if g not in (None, 1):
            raise UsageError("the built-in standard decomposition is genus 1; pass a JSON file for g >= 2")
        return siegelcones.standard_decomposition_g1()
    dec = siegelcones.decomposition_from_json(_load(source))
    if g is not None and dec.g != g:
        raise UsageError(f"decomposition has genus {dec.g}, expected {g}")
    return dec


def _emit(payload, fmt: str, rows=None):
    if fmt == "csv":
        if rows is None:
            rows = [payload] if isinstance(payload, dict) else payload
        buf = io.StringIO()
        keys = list(rows[0].keys()) if rows else []
        w = csv.DictWriter(buf, keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=False) + "\n")


# ---- verbs -------------------------------------------------------------------


def cmd_asymdim(args) -> int:
    wi = asymdim.WeightIndex(args.g, args.k, args.m, args.index, args.minus_id)
    rep = asymdim.closed_forms(wi)
    if args.table:
        ells = [int(t) for t in args.table.split(",")]
        rows = asymdim.asymptotic_table(wi, ells)
        if args.format == "csv":
            sys.stdout.write(asymdim.table_to_csv(rows))
            return EXIT_OK
        out = rep.to_json()
        out["table"] = [{k: (str(v) if isinstance(v, Fraction) else v) for k, v in r.items()} for r in rows]
        _emit(out, "json")
        return EXIT_OK
    _emit(rep.to_json(), args.format)
    return EXIT_OK


def cmd_degree(args) -> int:
    phi = _pl_function(args)
    out = {"degree": rational_to_str(plconical.toric_degree(phi))}
    if args.depths:
        depths = [int(t) for t in args.depths.split(",")]
        seq = plconical.decreasing_degree_limit(phi, phi.complex, phi.complex.rank, depths)
        out["decreasing"] = [[d, rational_to_str(v)] for d, v in zip(depths, seq)]
    _emit(out, args.format)
    return EXIT_OK


def cmd_cartier(args) -> int:
    dec = _decomposition(args.dec, args.g)
    phi = _divisorial(dec, args.phi)
    diag = siegelcones.cartier_diagnostic(args.m, phi, dec, args.depth)
    out = diag.to_json()
    out.update({"g": dec.g, "m": args.m})
    _emit(out, args.format)
    return EXIT_NEGATIVE if diag.kind == "NOT_CARTIER" else EXIT_OK


def _divisorial(dec, phi_path):
    if phi_path is None:
        return siegelcones.sufficiently_negative_builder(dec)
    d = _load(phi_path)
    return siegelcones.divisorial_from_ray_values(
        dec, {tuple(r): rational_from_str(v) for r, v in d["ray_values"]}, d.get("denominator_bound", 60))


def cmd_recession(args) -> int:
    g = convexrec.oracle_from_json(_load(args.oracle))
    x = _vector(args.base) if args.base else None
    r = convexrec.recession(g, x, _vector(args.direction), args.tol)
    _emit(r.to_json(), args.format)
    return EXIT_OK


def cmd_lelong(args) -> int:
    u = _vector(args.u)
    if args.oracle:
        g = convexrec.oracle_from_json(_load(args.oracle))
        v = convexrec.lelong_number(g, u, None, args.tol)
        out = {"direction": [rational_to_str(t) for t in u],
               "lelong": rational_to_str(v) if isinstance(v, Fraction) else str(v)}
    else:
        dec = _decomposition(args.dec, args.g)
        phi = _divisorial(dec, args.phi)
        v = siegelcones.lelong_at_ray(args.m, phi, u)
        out = {"u": [rational_to_str(t) for t in u], "m": args.m, "lelong": rational_to_str(v)}
    _emit(out, args.format)
    return EXIT_OK


def _series(args) -> tuple:
    phi = _pl_function(args)
    poly = plconical.section_polytope(phi)
    return phi, gradedseries.MonomialGradedSeries.of_polytope(poly)


def cmd_toric_volume(args) -> int:
    phi, a = _series(args)
    rep = gradedseries.volume(a, args.lmax)
    out = rep.to_json()
    out["degree"] = rational_to_str(plconical.toric_degree(phi))
    _emit(out, args.format, rows=[{"l": l, "normalized": float(v)} for l, v in rep.sequence] if args.format == "csv" else None)
    return EXIT_OK


def cmd_okounkov(args) -> int:
    _, a = _series(args)
    flag = None
    if args.flag:
        flag = [tuple(int(x) for x in b.split(",")) for b in args.flag.split(";")]
    body = gradedseries.okounkov_body(a, flag, args.lmax)
    out = body.to_json()
    out["volume"] = rational_to_str(body.volume)
    _emit(out, args.format)
    return EXIT_OK


def cmd_admissibility(args) -> int:
    dec = _decomposition(args.dec)
    rep = siegelcones.admissibility_check(dec, seed=args.seed)
    _emit(rep.to_json(), args.format, rows=[i.to_json() for i in rep.items] if args.format == "csv" else None)
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_ratio_filter(args) -> int:
    s = gradedseries.BidegreeSemigroup(_pairs(args.gens))
    res = gradedseries.ratio_filter(s, rational_from_str(args.n))
    _emit(res.to_json(), args.format)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    rep = run_selftest(args.seed)
    out = rep.to_json()
    rows = [{"module": m, **v} for m, v in out["modules"].items()]
    _emit(out, args.format, rows=rows if args.format == "csv" else None)
    return EXIT_OK if rep.ok else EXIT_ERROR


# ---- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=convexrec.DEFAULT_TOL)
    common.add_argument("--depth", type=int, default=1)
    common.add_argument("--lmax", type=int, default=50)

    p = argparse.ArgumentParser(prog="bdivtools", description="Toroidal b-divisor computations.")
    sub = p.add_subparsers(dest="verb", required=True)

    a = sub.add_parser("asymdim", parents=[common], help="closed-form asymptotic dimension constant")
    a.add_argument("--g", type=int, required=True)
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--m", type=int, required=True)
    a.add_argument("--index", type=int, default=1)
    a.add_argument("--minus-id", action="store_true", help="the group contains -1")
    a.add_argument("--table", help="comma-separated list of l for the prediction table")
    a.set_defaults(func=cmd_asymdim)

    for name, fn, hlp in (("degree", cmd_degree, "top self-intersection of a toric PL function"),
                          ("toric-volume", cmd_toric_volume, "Ehrhart volume sequence"),
                          ("okounkov", cmd_okounkov, "Okounkov body of the section series")):
        q = sub.add_parser(name, parents=[common], help=hlp)
        q.add_argument("--fan", help="fan JSON")
        q.add_argument("--pl", required=True, help="PL function JSON (forms or ray_values)")
        if name == "degree":
            q.add_argument("--depths", help="comma-separated refinement depths for the decreasing sequence")
        if name == "okounkov":
            q.add_argument("--flag", help="lattice basis as 'a,b;c,d'")
        q.set_defaults(func=fn)

    c = sub.add_parser("cartier-test", parents=[common], help="non-Cartier certificate for the descended function")
    c.add_argument("--g", type=int, default=1)
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--dec", default="standard", help="'standard' or decomposition JSON")
    c.add_argument("--phi", help="ray values JSON; default is the sufficiently negative builder")
    c.set_defaults(func=cmd_cartier)

    r = sub.add_parser("recession", parents=[common], help="recession function of a convex oracle")
    r.add_argument("--oracle", required=True)
    r.add_argument("--direction", required=True)
    r.add_argument("--base")
    r.set_defaults(func=cmd_recession)

    le = sub.add_parser("lelong", parents=[common], help="Lelong number at a ray")
    le.add_argument("--u", required=True, help="comma-separated vector")
    le.add_argument("--oracle", help="convex oracle JSON; otherwise the Siegel formula is used")
    le.add_argument("--g", type=int, default=1)
    le.add_argument("--m", type=int, default=1)
    le.add_argument("--dec", default="standard")
    le.add_argument("--phi")
    le.set_defaults(func=cmd_lelong)

    ad = sub.add_parser("admissibility", parents=[common], help="check a cone decomposition")
    ad.add_argument("--dec", default="standard")
    ad.set_defaults(func=cmd_admissibility)

    rf = sub.add_parser("ratio-filter", parents=[common], help="fixed-ratio slice of a bidegree semigroup")
    rf.add_argument("--gens", required=True, help="generators as 'k,m;k,m;...'")
    rf.add_argument("--n", required=True, help="ratio m/k, e.g. 3/2")
    rf.set_defaults(func=cmd_ratio_filter)

    st = sub.add_parser("selftest", parents=[common], help="run the invariant sweep")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, OSError, json.JSONDecodeError, KeyError) as e:
        print(f"bdivtools {args.verb}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, ArithmeticError) as e:
        print(f"bdivtools {args.verb}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
