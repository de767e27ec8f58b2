"""Command line front end.

Subcommands build the arrangement models, assemble and serialize their
connections, and run the verification suites.  Exit code 0 means every
requested check passed, 1 means a check ran and failed (a JSON failure
record goes to stdout), 2 means the invocation itself was invalid.

Rationals on the command line may be fractions or decimal strings; both
parse exactly (0.3 becomes 3/10, never a float).
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import numverify
from .arrangement import (
    beta_nbc,
    bounded_chambers,
    instantiate_fiber,
    random_admissible_point,
)
from .dfmodels import (
    build_in,
    build_j2,
    build_jn,
    gauge_factors_symbolic,
    gauge_pipeline,
    pde_operators,
)
from .errors import PfaffsysError
from .gaussmanin import (
    connection_matrix,
    connection_to_dict,
    flatness_check,
    load_connection,
    save_connection,
)


def _parse_bindings(text: str) -> dict[str, Fraction]:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"expected symbol=value, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = Fraction(value.strip())
    return out


def _build_family(args):
    if args.model == "j2":
        return build_j2()
    n = args.n if args.n is not None else 2
    if args.model == "i_n":
        return build_in(n)
    if args.model == "j_n":
        return build_jn(n)
    raise ValueError(f"unknown model {args.model!r}")


def _params(args, fam) -> dict[str, Fraction]:
    given = _parse_bindings(args.params or "")
    unknown = set(given) - set(fam.weight_pool.symbols)
    if unknown:
        raise ValueError(f"unknown weight symbols {sorted(unknown)}")
    values = {s: Fraction(1, 2) for s in fam.weight_pool.symbols}
    values.update(given)
    return values


def _point(args, fam) -> dict[str, Fraction]:
    given = _parse_bindings(args.point or "")
    if given:
        missing = set(fam.base_pool.symbols) - set(given)
        extra = set(given) - set(fam.base_pool.symbols)
        if missing or extra:
            raise ValueError(
                f"point must bind exactly {fam.base_pool.symbols}, got {sorted(given)}"
            )
        return {s: given[s] for s in fam.base_pool.symbols}
    return random_admissible_point(fam, seed=args.seed)


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _check(passed: bool, record: dict, args) -> int:
    _emit(record, args)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# subcommands


def _cmd_betanbc(args) -> int:
    fam = _build_family(args)
    _params(args, fam)
    point = _point(args, fam)
    fiber = instantiate_fiber(fam, point)
    sets = sorted(tuple(sorted(s)) for s in beta_nbc(fiber))
    print(f"# model={fam.name} seed={args.seed} "
          + " ".join(f"{k}={v}" for k, v in point.items()))
    for s in sets:
        print("{" + ",".join(str(i + 1) for i in s) + "}")
    return 0


def _cmd_chambers(args) -> int:
    fam = _build_family(args)
    _params(args, fam)
    point = _point(args, fam)
    fiber = instantiate_fiber(fam, point)
    chambers = sorted(bounded_chambers(fiber), key=lambda c: c.sign_vector)
    print(f"# model={fam.name} seed={args.seed} "
          + " ".join(f"{k}={v}" for k, v in point.items()))
    print(len(chambers))
    for ch in chambers:
        signs = "".join("+" if s > 0 else "-" for s in ch.sign_vector)
        print(f"{signs} vertices={len(ch.vertices)} area={ch.area()}")
    return 0


def _cmd_connection(args) -> int:
    fam = _build_family(args)
    conn = connection_matrix(fam, seed=args.seed)
    if args.out:
        save_connection(conn, args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(connection_to_dict(conn), indent=2, sort_keys=True))
    return 0


def _cmd_verify_flatness(args) -> int:
    conn = load_connection(args.infile)
    report = flatness_check(conn)
    return _check(True, {"check": "flatness", "result": report}, args)


def _cmd_verify_pfaffian(args) -> int:
    if args.infile:
        conn = load_connection(args.infile)
        fam = conn.family
    else:
        fam = _build_family(args)
        conn = connection_matrix(fam, seed=args.seed)
    params = _params(args, fam)
    point = _point(args, fam)
    rep = numverify.pfaffian_residual(
        conn, params, point, h=Fraction(args.h), tol=args.tol
    )
    ratios = rep.results.get("richardson_ratio", {})
    passed = rep.max_rel_residual <= args.max_residual and all(
        3.5 <= r <= 4.5 for r in ratios.values()
    )
    record = rep.to_dict()
    record["check"] = "pfaffian"
    record["passed"] = passed
    record["threshold"] = args.max_residual
    return _check(passed, record, args)


def _cmd_pde_ops(args) -> int:
    n = args.n if args.n is not None else 2
    for k, op in enumerate(pde_operators(n), start=1):
        print(f"P{k}: {op.text()}")
    return 0


def _cmd_verify_pde(args) -> int:
    fam = build_j2()
    params = _params(args, fam)
    point = _point(args, fam)
    rep = numverify.pde_residual(params, point, h=Fraction(args.h), tol=args.tol)
    passed = rep.max_rel_residual <= args.max_residual
    record = rep.to_dict()
    record["check"] = "pde"
    record["passed"] = passed
    record["threshold"] = args.max_residual
    return _check(passed, record, args)


def _gauge_payload(gauge) -> dict:
    if gauge.exact:
        zeta, eta = str(gauge.zeta), str(gauge.eta)
        res0 = [[str(e) for e in row] for row in gauge.residue_zero]
        res1 = [[str(e) for e in row] for row in gauge.residue_one]
    else:
        zeta = numverify._jsonable(gauge.zeta_numeric())
        eta = numverify._jsonable(gauge.eta_numeric())
        a, b = gauge.residues_numeric()
        res0 = numverify._jsonable(a)
        res1 = numverify._jsonable(b)
    zres, eres = gauge.defining_residual_bounds()
    return {
        "branch": gauge.branch,
        "exact": gauge.exact,
        "coefficients": {k: str(v) for k, v in gauge.coefficients.items()},
        "zeta": zeta,
        "eta": eta,
        "residue_at_zero": res0,
        "residue_at_one": res1,
        "defining_residuals": [zres, eres],
    }


def _cmd_ode_fuchsianize(args) -> int:
    fam = build_j2()
    params = _params(args, fam)
    branches = ("principal", "secondary") if args.branch == "both" else (args.branch,)
    payload = {"params": {k: str(v) for k, v in params.items()}, "branches": {}}
    for branch in branches:
        payload["branches"][branch] = _gauge_payload(gauge_pipeline(params, branch))
    payload["gauge_determinant_is_cubic"] = _gauge_det_is_cubic()
    _emit(payload, args)
    return 0


def _gauge_det_is_cubic() -> bool:
    diag, shear = gauge_factors_symbolic()
    det = (shear * diag).det()
    pool = det.pool
    expected = (pool.var("z") - pool.one()) ** 3
    return bool((det.num - expected * det.den).is_zero)


def _cmd_verify_gauge(args) -> int:
    fam = build_j2()
    params = _params(args, fam)
    branches = ("principal", "secondary") if args.branch == "both" else (args.branch,)
    records = {}
    passed = True
    for branch in branches:
        gauge = gauge_pipeline(params, branch)
        rep = numverify.gauge_transport_residual(gauge)
        zres, eres = rep.results["defining_residuals"]
        ok = (
            rep.max_rel_residual <= args.max_residual
            and zres <= 1e-30
            and eres <= 1e-30
        )
        passed = passed and ok
        rec = rep.to_dict()
        rec["passed"] = ok
        records[branch] = rec
    det_ok = _gauge_det_is_cubic()
    passed = passed and det_ok
    record = {
        "check": "gauge",
        "branches": records,
        "gauge_determinant_is_cubic": det_ok,
        "threshold": args.max_residual,
        "passed": passed,
    }
    return _check(passed, record, args)


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(p, point=True, tols=False):
    p.add_argument("--model", default="j2", choices=["j2", "i_n", "j_n"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--params", default="", help="weight bindings a=1/2,b=0.3,...")
    if point:
        p.add_argument("--point", default="", help="base point x=3/10,y=7/10")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default=None)
    if tols:
        p.add_argument("--h", default="1/1000", help="finite-difference step")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--max-residual", type=float, default=1e-4)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pfaffsys", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("betanbc", help="print the distinguished cohomology basis sets")
    _add_common(p)
    p.set_defaults(func=_cmd_betanbc)

    p = sub.add_parser("chambers", help="list bounded chambers of a fiber")
    _add_common(p)
    p.set_defaults(func=_cmd_chambers)

    p = sub.add_parser("connection", help="assemble and serialize the connection")
    _add_common(p, point=False)
    p.set_defaults(func=_cmd_connection)

    p = sub.add_parser("verify-flatness", help="integrability of a stored connection")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_verify_flatness)

    p = sub.add_parser(
        "verify-pfaffian", help="finite differences of chamber integrals vs the system"
    )
    _add_common(p, tols=True)
    p.add_argument("--in", dest="infile", default=None, help="stored connection file")
    p.set_defaults(func=_cmd_verify_pfaffian)

    p = sub.add_parser("pde-ops", help="print the generated annihilating operators")
    p.add_argument("--n", type=int, default=2)
    p.set_defaults(func=_cmd_pde_ops)

    p = sub.add_parser("verify-pde", help="stencil residuals of the operators")
    _add_common(p, tols=True)
    p.set_defaults(func=_cmd_verify_pde)
    p.set_defaults(h="1/100", max_residual=1e-3)

    p = sub.add_parser(
        "ode-fuchsianize", help="shear parameters and residue matrices of the cubic"
    )
    _add_common(p, point=False)
    p.add_argument("--branch", default="both",
                   choices=["principal", "secondary", "both"])
    p.set_defaults(func=_cmd_ode_fuchsianize)

    p = sub.add_parser(
        "verify-gauge", help="transport agreement between the cubic and its system"
    )
    _add_common(p, point=False)
    p.add_argument("--branch", default="both",
                   choices=["principal", "secondary", "both"])
    p.add_argument("--max-residual", type=float, default=1e-6)
    p.set_defaults(func=_cmd_verify_gauge)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PfaffsysError as exc:
        print(json.dumps({"failure": exc.record()}, indent=2, sort_keys=True, default=str))
        return 1


if __name__ == "__main__":
    sys.exit(main())
