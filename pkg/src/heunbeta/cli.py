"""Command-line interface.

Exit codes: 0 success, 2 constraint or domain violation, 3 no termination,
4 oracle failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from .che_core import CheParams, _coefficients, integrate_che
from .errors import (
    ConstraintViolation,
    ConvergenceError,
    DomainError,
    HeunBetaError,
    NotTerminating,
    PivotBreakdown,
    StepBreakdown,
    StepSizeError,
    UnsupportedFamily,
)
from .expansions import (
    DEFAULT_MAX_TERMS,
    DEFAULT_TAIL_TOL,
    EQ_TOL,
    Family,
    build_series,
    convergence_diagnostics,
    evaluate,
)
from .termination import (
    closed_form_solution,
    detect_termination,
    family_a_crossref,
    poly_roots,
    reduce_to_elementary,
    sigma_polynomial,
    solve_family_d,
)

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NO_TERMINATION = 3
EXIT_ORACLE = 4

CSV_HEADER = ["z_re", "z_im", "u_re", "u_im", "residual_abs", "residual_rel"]
PARAM_KEYS = ("p", "alpha", "gamma", "delta", "sigma")
OPTIONAL_KEYS = ("family", "N", "delta0", "max_terms", "tail_tol")
LISTING_CAP = 50


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# formatting -----------------------------------------------------------------

def fnum(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x + 0.0:.17g}"


def fcx(z):
    z = complex(z)
    return f"[{fnum(z.real)}, {fnum(z.imag)}]"


def _json_value(obj):
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return "null" if not math.isfinite(obj) else fnum(obj)
    if isinstance(obj, complex):
        return _json_value([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in obj.items()) + "}"
    return "[" + ", ".join(_json_value(v) for v in obj) + "]"


def dumps17(obj):
    """JSON text with every float written to 17 significant digits."""
    return _json_value(obj)


# input ----------------------------------------------------------------------

def _parse_complex(name, v):
    if isinstance(v, bool):
        raise CliError(f"{name}: expected number or [re, im]", EXIT_DOMAIN)
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise CliError(f"{name}: expected number or [re, im], got {v!r}", EXIT_DOMAIN)


def load_params(path):
    """Read a parameter file; returns ``(CheParams, extras)``."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read parameter file {path}: {exc}", EXIT_DOMAIN) from None
    if not isinstance(data, dict):
        raise CliError("parameter file must hold a JSON object", EXIT_DOMAIN)
    unknown = sorted(set(data) - set(PARAM_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise CliError(f"unknown keys in parameter file: {', '.join(unknown)}", EXIT_DOMAIN)
    missing = [k for k in ("p", "alpha", "gamma", "delta") if k not in data]
    if missing:
        raise CliError(f"missing keys in parameter file: {', '.join(missing)}", EXIT_DOMAIN)
    vals = {k: _parse_complex(k, data[k]) for k in PARAM_KEYS if k in data}
    try:
        params = CheParams(**vals)
    except DomainError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    extras = {k: data[k] for k in OPTIONAL_KEYS if k in data}
    if "delta0" in extras:
        extras["delta0"] = _parse_complex("delta0", extras["delta0"])
    return params, extras


def _family(args, extras):
    fam = args.family or extras.get("family")
    if fam is None:
        raise CliError("no family given (use --family or the 'family' key)", EXIT_DOMAIN)
    try:
        return Family(str(fam).upper())
    except ValueError:
        raise CliError(f"unknown family {fam!r}", EXIT_DOMAIN) from None


def _pick(args, extras, name, default):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return extras.get(name, default)


def _build(args, params, extras, family):
    delta0 = extras.get("delta0")
    if family is Family.D and delta0 is None and "N" in extras:
        delta0 = params.gamma - 2 - int(extras["N"])
    return build_series(
        family, params,
        delta0_override=delta0 if family is Family.D else None,
        max_terms=int(_pick(args, extras, "max_terms", DEFAULT_MAX_TERMS)),
        tail_tol=float(_pick(args, extras, "tail_tol", DEFAULT_TAIL_TOL)),
        eq_tol=args.eq_tol,
    )


def _header(out, command, args, params, family, **tols):
    out.write(f"# heunbeta {command}\n")
    out.write(f"# family: {family.value}\n")
    out.write("# params: " + " ".join(f"{k}={fcx(getattr(params, k))}" for k in PARAM_KEYS) + "\n")
    items = {"eq_tol": args.eq_tol, **tols}
    out.write("# tolerances: " + " ".join(f"{k}={fnum(v) if isinstance(v, float) else v}"
                                          for k, v in items.items()) + "\n")


# commands -------------------------------------------------------------------

def cmd_series(args, out):
    params, extras = load_params(args.params)
    family = _family(args, extras)
    series = _build(args, params, extras, family)
    _header(out, "series", args, params, family,
            max_terms=int(_pick(args, extras, "max_terms", DEFAULT_MAX_TERMS)),
            tail_tol=float(series.tail_tol))
    out.write(f"mode: {series.mode}\n")
    out.write(f"gamma0: {fcx(series.gamma0)}\n")
    out.write(f"delta0: {fcx(series.delta0)}\n")
    out.write(f"s: {fcx(series.s)}\n")
    if series.terminated:
        out.write(f"terminated N={series.N}\n")
    else:
        out.write(f"not terminated ({len(series.coeffs)} coefficients)\n")
    out.write(f"coefficients: {len(series.coeffs)}\n")
    for n, a in enumerate(series.coeffs[:LISTING_CAP]):
        out.write(f"a[{n}] = {fcx(a)}\n")
    rest = len(series.coeffs) - LISTING_CAP
    if rest > 0:
        out.write(f"... {rest} more\n")
    if not series.terminated and len(series.coeffs) >= 2:
        z = args.z
        diag = convergence_diagnostics(series, z)
        out.write(f"diagnostics at z={fnum(z)}:\n")
        out.write(f"estimated_limit: {fnum(diag.estimated_limit)}\n")
        out.write("coeff_ratio_tail: " + " ".join(fcx(r) for r in diag.coeff_ratio_tail) + "\n")
        out.write("term_ratio_tail: " + " ".join(fnum(r) for r in diag.term_ratio_tail) + "\n")
    return EXIT_OK


def _parse_grid(text):
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise CliError(f"bad grid {text!r}; expected a:b:n", EXIT_DOMAIN) from None
    if n < 1:
        raise CliError("grid needs at least one point", EXIT_DOMAIN)
    grid = np.linspace(a, b, n)
    if np.any(grid < 0) or np.any(grid >= 1):
        raise CliError("grid must lie in [0, 1)", EXIT_DOMAIN)
    return grid


def eval_rows(series, grid):
    """Evaluation rows with residuals normalised by the grid scale."""
    params = series.params
    raw = []
    scale = 0.0
    for z in grid:
        z = complex(z)
        if z == 0:
            raw.append((z, evaluate(series, z), math.nan))
            continue
        u, du, d2u = series.evaluate_with_derivatives(z)
        c1, c0 = _coefficients(params, z)
        raw.append((z, u, abs(d2u + c1 * du + c0 * u)))
        scale = max(scale, abs(u), abs(du), abs(d2u))
    rows = []
    for z, u, r in raw:
        rel = r / scale if scale > 0 else r
        rows.append({"z_re": z.real, "z_im": z.imag, "u_re": u.real, "u_im": u.imag,
                     "residual_abs": r, "residual_rel": rel})
    return rows, scale


def write_rows(rows, fmt, fh):
    if fmt == "csv":
        fh.write(",".join(CSV_HEADER) + "\n")
        for row in rows:
            fh.write(",".join(fnum(row[k]) for k in CSV_HEADER) + "\n")
    else:
        fh.write(dumps17(rows) + "\n")


def cmd_eval(args, out):
    params, extras = load_params(args.params)
    family = _family(args, extras)
    grid = _parse_grid(args.grid)
    series = _build(args, params, extras, family)
    rows, scale = eval_rows(series, grid)
    buf = io.StringIO()
    write_rows(rows, args.format, buf)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
        bound = max((evaluate(series, z, return_bound=True).tail_bound for z in grid), default=0.0)
        _header(out, "eval", args, params, family, tail_tol=float(series.tail_tol))
        out.write(f"terminated: {str(series.terminated).lower()}\n")
        out.write(f"points: {len(rows)}\n")
        out.write(f"scale: {fnum(scale)}\n")
        finite = [r["residual_rel"] for r in rows if not math.isnan(r["residual_rel"])]
        out.write(f"max_residual_rel: {fnum(max(finite) if finite else math.nan)}\n")
        out.write(f"max_tail_bound: {fnum(bound)}\n")
        out.write(f"wrote: {args.out}\n")
    else:
        out.write(buf.getvalue())
    return EXIT_OK


def _write_closed_form(out, fs, indent="  "):
    out.write(f"{indent}coefficients: " + " ".join(fcx(a) for a in fs.coeffs) + "\n")
    try:
        el = reduce_to_elementary(fs)
    except StepBreakdown as exc:
        out.write(f"{indent}elementary: unavailable ({exc})\n")
        return
    out.write(f"{indent}elementary: A={fcx(el.A_const)} phi=" + " ".join(fcx(c) for c in el.phi) + "\n")
    out.write(f"{indent}u0: B_z({fcx(el.gamma0)}, {fcx(el.delta0)})"
              f" fully_elementary={str(el.fully_elementary).lower()}\n")


def cmd_terminate(args, out):
    params, extras = load_params(args.params)
    family = _family(args, extras)
    n_max = args.n_max
    _header(out, "terminate", args, params, family, n_max=n_max)
    if family is Family.E:
        raise CliError("family E series do not terminate", EXIT_NO_TERMINATION)
    if family is Family.D:
        return _terminate_d(args, out, params, extras, n_max)
    cond = detect_termination(params, family, n_max, tol=args.eq_tol)
    if cond is None:
        raise CliError(f"no termination with N <= {n_max} ({family.value}: "
                       f"{'gamma+delta-2' if family is Family.A else 'gamma+delta-alpha-1'}"
                       " is not a small non-negative integer)", EXIT_NO_TERMINATION)
    N = cond.N
    out.write(f"N: {N}\n")
    out.write(f"relation: {cond.relation} residual={fnum(cond.residual)}\n")
    sp = sigma_polynomial(params, family, N)
    if family is Family.B:
        out.write(f"scalar condition: {fcx(sp.condition_value)}\n")
        if abs(sp.condition_value) > args.eq_tol:
            raise CliError("family B scalar condition not satisfied", EXIT_NO_TERMINATION)
        _write_closed_form(out, closed_form_solution(params, family, N))
        return EXIT_OK
    out.write("sigma polynomial (ascending): " + " ".join(fcx(c) for c in sp.coeffs) + "\n")
    roots = poly_roots(sp.coeffs)
    out.write("roots: " + " ".join(fcx(r) for r in roots) + "\n")
    if family is Family.A:
        for i, r in enumerate(roots):
            out.write(f"root[{i}] sigma={fcx(r)}\n")
            fs = closed_form_solution(params.replace(delta=sp.delta, sigma=r), family, N)
            _write_closed_form(out, fs)
        return EXIT_OK
    # family C: sigma is pinned to 4 p alpha
    out.write(f"condition at sigma=4*p*alpha: {fcx(sp.condition_value)}\n")
    try:
        fs = closed_form_solution(params, family, N)
    except NotTerminating as exc:
        raise CliError(f"family C condition not satisfied: {exc}", EXIT_NO_TERMINATION) from None
    _write_closed_form(out, fs)
    return EXIT_OK


def _terminate_d(args, out, params, extras, n_max):
    if "N" in extras:
        N = int(extras["N"])
    elif "delta0" in extras:
        cond = detect_termination(params, Family.D, n_max, delta0=extras["delta0"], tol=args.eq_tol)
        if cond is None:
            raise CliError(f"delta0 does not match gamma-2-N for N <= {n_max}", EXIT_NO_TERMINATION)
        N = cond.N
    else:
        N = 0
    if N > n_max:
        raise CliError(f"N={N} exceeds --n-max {n_max}", EXIT_NO_TERMINATION)
    out.write(f"N: {N}\n")
    out.write(f"delta0: {fcx(params.gamma - 2 - N)}\n")
    sols = solve_family_d(params, N)
    if not sols:
        raise CliError("no (delta, sigma) pair terminates the series", EXIT_NO_TERMINATION)
    out.write(f"solutions: {len(sols)}\n")
    for i, (d, s) in enumerate(sols):
        Np = family_a_crossref(params, d, s, N + 2)
        xref = "none" if Np is None else f"N'={Np}"
        out.write(f"pair[{i}] delta={fcx(d)} sigma={fcx(s)} family_A={xref}\n")
        fs = closed_form_solution(params.replace(delta=d, sigma=s), Family.D, N)
        _write_closed_form(out, fs)
    return EXIT_OK


def verify_series(series, z0, z1, tol, perturb_sigma=0.0, checkpoints=9):
    """Max deviation between the series and the RK trajectory started from it.

    Deviations are measured as ``|u_rk - u| / max(1, |u|)`` at evenly spaced
    checkpoints along ``[z0, z1]``.
    """
    params = series.params
    if perturb_sigma:
        params = params.replace(sigma=params.sigma + perturb_sigma)
    u, du, _ = series.evaluate_with_derivatives(z0)
    zs = np.linspace(z0, z1, checkpoints)
    worst = 0.0
    for za, zb in zip(zs[:-1], zs[1:]):
        u, du = integrate_che(params, za, u, du, zb, tol)
        ref = series.evaluate(zb)
        worst = max(worst, abs(u - ref) / max(1.0, abs(ref)))
    return worst


def cmd_verify(args, out):
    params, extras = load_params(args.params)
    family = _family(args, extras)
    if not (0 < args.z0 < 1 and 0 < args.z1 < 1):
        raise CliError("z0 and z1 must lie in (0, 1)", EXIT_DOMAIN)
    series = _build(args, params, extras, family)
    _header(out, "verify", args, params, family, tol=args.tol, tail_tol=float(series.tail_tol))
    try:
        dev = verify_series(series, args.z0, args.z1, args.tol, args.perturb_sigma)
    except (StepSizeError, ConvergenceError) as exc:
        raise CliError(f"oracle failure: {exc}", EXIT_ORACLE) from None
    limit = 10 * args.tol
    out.write(f"interval: [{fnum(args.z0)}, {fnum(args.z1)}]\n")
    if args.perturb_sigma:
        out.write(f"perturb_sigma: {fnum(args.perturb_sigma)}\n")
    out.write(f"max_deviation: {fnum(dev)}\n")
    out.write(f"threshold: {fnum(limit)}\n")
    if dev <= limit:
        out.write("result: pass\n")
        return EXIT_OK
    out.write("result: fail\n")
    return EXIT_ORACLE


# entry point ----------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="heunbeta",
        description="Incomplete-Beta series solutions of the confluent Heun equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("params", help="JSON parameter file")
        p.add_argument("--family", help="expansion family A-E (overrides the file)")
        p.add_argument("--eq-tol", type=float, default=EQ_TOL, help="family constraint tolerance")

    p = sub.add_parser("series", help="build a series and print its coefficients")
    common(p)
    p.add_argument("--max-terms", type=int)
    p.add_argument("--tail-tol", type=float)
    p.add_argument("--z", type=float, default=0.5, help="point for convergence diagnostics")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("eval", help="evaluate a solution and its residual on a grid")
    common(p)
    p.add_argument("--grid", default="0.05:0.95:33", help="a:b:n (inclusive, uniform)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--max-terms", type=int)
    p.add_argument("--tail-tol", type=float)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("terminate", help="termination conditions and closed forms")
    common(p)
    p.add_argument("--n-max", type=int, default=10)
    p.set_defaults(func=cmd_terminate)

    p = sub.add_parser("verify", help="compare the series with a Runge-Kutta integration")
    common(p)
    p.add_argument("--z0", type=float, default=0.1)
    p.add_argument("--z1", type=float, default=0.9)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--perturb-sigma", type=float, default=0.0,
                   help="shift sigma in the integrated equation only")
    p.add_argument("--max-terms", type=int)
    p.add_argument("--tail-tol", type=float)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except CliError as exc:
        err.write(f"error: {exc}\n")
        return exc.code
    except (ConstraintViolation, DomainError, PivotBreakdown, UnsupportedFamily) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except NotTerminating as exc:
        err.write(f"error: {exc}\n")
        return EXIT_NO_TERMINATION
    except (StepSizeError, ConvergenceError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ORACLE
    except HeunBetaError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
