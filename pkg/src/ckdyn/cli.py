"""Command-line interface: ``ckdyn <command> ...``.

Structured results are JSON, grids and orbits are CSV.  Every output embeds
the resolved configuration (including the RNG seed) and prints floats with
full ``repr`` precision.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from ._numeric import complex_pair, parse_complex
from .automorphism import AutomorphismSpec, BLOWUP_INTERPRETATION, classify_point, iterate, \
    verify_blowup_factorization
from .boettcher import phi
from .conjugacy import assemble_G, build_omega, certified_order, contraction_report, \
    iterate_g, lambda_roots, sample_model_points, stable_order, support_exponents, \
    verify_conjugacy_numeric, verify_conjugacy_series
from .fw3 import FWClassSpec, attracting_fixed_point_check, check_eligibility
from .winding import circle_curve, winding_details


def _pair(z) -> list:
    return complex_pair(z)


def _point(text_items) -> tuple:
    return tuple(parse_complex(t) for t in text_items)


def _fraction_json(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    return str(x)


def _clean(x):
    """Make a payload strict JSON: infinities become the string "inf"."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _config(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func",):
            continue
        out[key] = value
    return out


def _emit(args, payload: dict):
    payload = _clean({"config": _config(args), **payload})
    text = json.dumps(payload, indent=2, default=_fraction_json, allow_nan=False)
    _write(args, text + "\n")


def _write(args, text: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_header(args) -> str:
    return "# config: " + json.dumps(_config(args), default=_fraction_json) + "\n"


def _spec(args) -> AutomorphismSpec:
    return AutomorphismSpec.load(args.spec)


# -- commands ------------------------------------------------------------------------

def cmd_orbit(args):
    spec = _spec(args)
    orbit = iterate(spec, _point(args.point), args.steps)
    text = _csv_header(args)
    if orbit.truncated:
        text += "# truncated: overflow before the requested number of steps\n"
    _write(args, text + orbit.to_csv())


def cmd_classify_point(args):
    spec = _spec(args)
    rep = classify_point(spec, _point(args.point), args.max_iter)
    _emit(args, {"status": rep.status, "escaped": rep.escaped, "steps": rep.steps,
                 "radius_used": rep.radius_used,
                 "final_point": [_pair(c) for c in rep.final_point]})


def cmd_basin_grid(args):
    spec = _spec(args)
    if not args.slice.startswith("z") or not args.slice[1:].isdigit():
        raise ValueError("--slice must name a coordinate such as z1")
    axis = int(args.slice[1:]) - 1
    if not 0 <= axis < spec.k:
        raise ValueError(f"--slice coordinate out of range 1..{spec.k}")
    center = parse_complex(args.center)
    base = list(_point(args.base)) if args.base else [0j] * spec.k
    if len(base) != spec.k:
        raise ValueError(f"--base needs {spec.k} coordinates")
    res, half = args.res, args.extent / 2
    lines = [_csv_header(args).rstrip("\n"), "i,j,re,im,steps"]
    for j in range(res):
        im = center.imag - half + args.extent * (j + 0.5) / res
        for i in range(res):
            re = center.real - half + args.extent * (i + 0.5) / res
            p = list(base)
            p[axis] = complex(re, im)
            rep = classify_point(spec, p, args.max_iter)
            lines.append(f"{i},{j},{re!r},{im!r},{rep.steps if rep.escaped else -1}")
    _write(args, "\n".join(lines) + "\n")


def cmd_phi(args):
    spec = _spec(args)
    res = phi(spec, _point(args.point), tol=args.tol)
    _emit(args, {"phi": _pair(res.value), "terms_used": res.terms_used,
                 "last_increment": res.last_increment, "converged": res.converged})


def _load_curve(args, spec):
    data = {"m": args.m, "radius": args.radius, "n_samples": args.n_samples,
            "preimage": args.preimage}
    if args.curve:
        data.update(json.loads(Path(args.curve).read_text()))
    curve = circle_curve(spec, int(data.get("m", 1)), data.get("radius"),
                         int(data.get("n_samples", 64)))
    n = int(data.get("preimage", 0))
    if n:
        curve = curve.image(spec, -n)
    return curve, data


def cmd_winding(args):
    spec = _spec(args)
    curve, data = _load_curve(args, spec)
    res = winding_details(spec, curve, max_iter=args.max_iter, dps=args.dps)
    _emit(args, {"curve": data, "alpha": str(res.alpha),
                 "alpha_fraction": str(res.alpha.as_fraction()), "depth": res.depth,
                 "winding": res.winding, "total_argument": res.total_argument,
                 "integrality_defect": res.integrality_defect,
                 "evaluations": res.n_evaluations})


def cmd_lambda(args):
    spec = _spec(args)
    roots = lambda_roots(spec)
    _emit(args, {"roots": [_pair(r) for r in roots],
                 "residuals": [abs(spec.d * r ** (spec.k - 1) + spec.a(2)) for r in roots]})


def _working_order(args, spec, omega):
    L = omega.constants.L
    if args.order is not None:
        return Fraction(args.order) * L
    return stable_order(spec, args.steps, 4 * certified_order(spec, args.steps))


def cmd_conjugacy_check(args):
    spec = _spec(args)
    omega = build_omega(spec)
    order = _working_order(args, spec, omega)
    L = omega.constants.L
    g = iterate_g(spec, None, omega, args.steps, order)
    G = assemble_G(g, omega)
    report = verify_conjugacy_series(G, omega, spec, order)
    payload = {
        "order_v": order, "order_u": order / L, "L": L,
        "support_exponents": len(support_exponents(G, order)),
        "components": [{"component": r.component, "residual_valuation_v": r.valuation,
                        "cancels": r.cancels, "max_relative": r.max_relative}
                       for r in report],
        "all_cancel": all(r.cancels for r in report),
    }
    if args.numeric:
        pts = sample_model_points(omega, args.samples, vmin=args.vmin,
                                  rng=random.Random(args.seed))
        num = verify_conjugacy_numeric(G, omega, spec, pts, vmin=args.vmin)
        payload["numeric"] = {"max_relative": num.max_relative,
                              "per_component": list(num.per_component),
                              "samples": num.n_samples}
    _emit(args, payload)


def cmd_series_demo(args):
    spec = _spec(args)
    omega = build_omega(spec)
    order = _working_order(args, spec, omega)
    g = iterate_g(spec, None, omega, args.steps, order)
    rep = contraction_report(spec, args.steps, order)
    _emit(args, {"order_v": order, "g": str(g), "shift": str(omega.shift_series),
                 "lambdas": [_pair(r) for r in omega.lambdas],
                 "critical_u": rep.critical, "epsilon_u": rep.epsilon,
                 "increment_valuations_u": list(rep.valuations),
                 "contraction_bounds_u": list(rep.bounds)})


def cmd_fw3(args):
    params = json.loads(Path(args.params).read_text()) if args.params else {}
    fw = FWClassSpec(args.class_id, args.variant, params)
    rep = check_eligibility(fw)
    payload = {"spec": fw.to_dict(), "report": rep.to_dict()}
    if args.basin:
        esc = attracting_fixed_point_check(fw, args.samples, args.max_iter, args.radius, args.seed)
        payload["basin"] = {"fraction_escaped": esc.fraction, "escaped": esc.escaped,
                            "samples": esc.n_samples}
    _emit(args, payload)


def cmd_blowup_check(args):
    rng = random.Random(args.seed)
    alpha = ([parse_complex(a) for a in args.alpha] if args.alpha else
             [complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)) for _ in range(args.k - 1)])
    samples = [tuple(complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
                     for _ in range(args.k)) for _ in range(args.samples)]
    rep = verify_blowup_factorization(args.d, args.k, alpha, samples)
    _emit(args, {"alpha": [_pair(a) for a in alpha], "max_residual": rep.max_residual,
                 "residuals": list(rep.residuals), "interpretation": BLOWUP_INTERPRETATION})


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ckdyn", description=(
        "Dynamics of the automorphisms (z1^d + a2 z2 + ... + ak zk, z3, ..., zk, z1) of C^k."))
    parser.add_argument("--version", action="version", version=f"ckdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, spec=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        if spec:
            p.add_argument("--spec", required=True,
                           help='JSON file {"k": .., "d": .., "alpha": [[re, im], ...]}')
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--out", help="write to this file instead of stdout")
        p.set_defaults(func=func)
        return p

    p = add("orbit", cmd_orbit, "orbit of a point as CSV (negative --steps walks backwards)")
    p.add_argument("--point", nargs="+", required=True, help="coordinates as re,im")
    p.add_argument("--steps", type=int, default=10)

    p = add("classify-point", cmd_classify_point, "escape classification of a point")
    p.add_argument("--point", nargs="+", required=True)
    p.add_argument("--max-iter", type=int, default=200)

    p = add("basin-grid", cmd_basin_grid, "escape steps on a grid in one coordinate slice")
    p.add_argument("--slice", default="z1")
    p.add_argument("--center", default="0,0")
    p.add_argument("--extent", type=float, default=4.0)
    p.add_argument("--res", type=int, default=100)
    p.add_argument("--base", nargs="+", help="values of all coordinates off the slice")
    p.add_argument("--max-iter", type=int, default=200)

    p = add("phi", cmd_phi, "Böttcher coordinate of a point in V+")
    p.add_argument("--point", nargs="+", required=True)
    p.add_argument("--tol", type=float, default=1e-12)

    p = add("winding", cmd_winding, "winding invariant of a circle or of one of its preimages")
    p.add_argument("--curve", help='JSON {"m": 1, "radius": null, "n_samples": 64, "preimage": 0}')
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--radius", type=float)
    p.add_argument("--n-samples", type=int, default=64)
    p.add_argument("--preimage", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--dps", type=int, help="mpmath digits (needed for deep preimages)")

    add("lambda", cmd_lambda, "roots of d r^(k-1) + a2 = 0")

    for name, func, text in (
            ("conjugacy-check", cmd_conjugacy_check,
             "iterate g and check G o omega = H o G on the truncated series"),
            ("series-demo", cmd_series_demo, "print g and the increment valuations")):
        p = add(name, func, text)
        p.add_argument("--order", help="truncation order in powers of u, e.g. 8 or 16/3 "
                                       "(default: where g_steps has stabilized)")
        p.add_argument("--steps", type=int, default=3)
        if name == "conjugacy-check":
            p.add_argument("--numeric", action="store_true")
            p.add_argument("--samples", type=int, default=100)
            p.add_argument("--vmin", type=float, default=4.0)

    p = sub.add_parser("fw3", help="Fornaess-Wu normal forms of quadratic automorphisms of C^3")
    fw_sub = p.add_subparsers(dest="fw_command", required=True)
    q = fw_sub.add_parser("classify", help="eligibility report for one normal form")
    q.add_argument("--class", dest="class_id", type=int, required=True)
    q.add_argument("--variant", type=int, default=1)
    q.add_argument("--params", help="JSON object of named constants")
    q.add_argument("--basin", action="store_true", help="also run the escape witness")
    q.add_argument("--samples", type=int, default=200)
    q.add_argument("--max-iter", type=int, default=50)
    q.add_argument("--radius", type=float, default=1e3)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_fw3)

    p = add("blowup-check", cmd_blowup_check, "compare the chart map with its blow-up factorization",
            spec=False)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--alpha", nargs="+", help="a2 ... ak as re,im (default: random)")
    p.add_argument("--samples", type=int, default=20)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, ArithmeticError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"ckdyn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
