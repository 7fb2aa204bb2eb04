"""Command-line front end.

Exit codes: 0 ok, 1 hypothesis (or verification) failure, 2 input error,
3 solver non-convergence.

Problem files are INI text::

    [problem]
    mu = 1.9
    R = 1
    f = lambda/(1-abs(t)^0.9)^0.9*(1/x^0.9 - x + R)
    q = lambda/(1-abs(t)^0.9)^0.9
    u = 1/x^0.9
    v = x + R
    gamma_r = lambda/r^0.9

    [params]
    lambda = 1e-16
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ExpressionError, FracBVPError, ProblemFileError
from .expr import parse
from .greens import FracOrder, green_eval, green_row_integral
from .numerics import gamma
from .problem import ProblemSpec, check_hypotheses, compute_chi, example_problem
from .solver import SolutionReport, SolverConfig, solve

EXIT_OK, EXIT_HYPOTHESIS, EXIT_INPUT, EXIT_NONCONVERGENCE = 0, 1, 2, 3

EXPRESSION_FIELDS = ("f", "q", "u", "v", "gamma_r")
CSV_COLUMNS = ("t", "x", "envelope_lo_factor1", "envelope_lo_paper", "envelope_hi")

# reference Example constants and the tolerances they are reproduced to
EXAMPLE_CONSTANTS = {
    "int (1-|t|)^0.9 q dt / lambda": (2.12926, 1e-4),
    "int (1-|t|)^0.9 q u(c(1-|t|^1.9)) dt * c^0.9 / lambda": (12.8761, 1e-3),
    "chi_1 at lambda = 1": (11.8713, 1e-3),
    "Gamma(2.9)/2": (0.913678, 1e-6),
    "11.8713^10": (5.55871e10, 1e-3),
}


# -- problem files ---------------------------------------------------------

def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    return cp


def loads_problem(text: str) -> ProblemSpec:
    """Parse problem-file text.

    Raises
    ------
    ProblemFileError
        Naming the offending field.
    """
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ProblemFileError(f"malformed problem file: {err}") from err
    if not cp.has_section("problem"):
        raise ProblemFileError("missing [problem] section", "problem")
    sec = cp["problem"]
    for key in ("mu", "R") + EXPRESSION_FIELDS:
        if key not in sec:
            raise ProblemFileError(f"missing field {key!r}", key)
    unknown = set(sec) - {"mu", "R", *EXPRESSION_FIELDS}
    if unknown:
        name = sorted(unknown)[0]
        raise ProblemFileError(f"unknown field {name!r}", name)
    nums = {}
    for key in ("mu", "R"):
        try:
            nums[key] = float(sec[key])
        except ValueError:
            raise ProblemFileError(f"field {key!r} is not a number: {sec[key]!r}", key) from None
    params = {}
    if cp.has_section("params"):
        for key, raw in cp["params"].items():
            try:
                params[key] = float(raw)
            except ValueError:
                raise ProblemFileError(f"parameter {key!r} is not a number: {raw!r}", key) from None
    try:
        mu = FracOrder(nums["mu"])
    except FracBVPError as err:
        raise ProblemFileError(str(err), "mu") from err
    exprs = {}
    for key in EXPRESSION_FIELDS:
        try:
            exprs[key] = parse(sec[key])
        except ExpressionError as err:
            raise ProblemFileError(f"field {key!r}: {err}", key) from err
    try:
        return ProblemSpec(mu=mu, R=nums["R"], params=params, **exprs)
    except FracBVPError as err:
        raise ProblemFileError(str(err)) from err


def load_problem(path) -> ProblemSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ProblemFileError(f"cannot read problem file {path}: {err}", "path") from err
    return loads_problem(text)


def dumps_problem(p: ProblemSpec) -> str:
    cp = _parser()
    cp["problem"] = {"mu": repr(p.mu.mu), "R": repr(p.R),
                     **{k: p.source(k) for k in EXPRESSION_FIELDS}}
    cp["params"] = {k: repr(v) for k, v in p.params.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# -- output ----------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v))


def solution_csv(report: SolutionReport) -> str:
    """Locale-independent CSV with shortest round-trip float formatting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    x = report.x
    for i, t in enumerate(x.nodes):
        w.writerow([_fmt(t), _fmt(x.values[i]), _fmt(report.envelope_lo_factor1[i]),
                    _fmt(report.envelope_lo_paper[i]), _fmt(report.envelope_hi)])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _render(data: dict, fmt: str) -> str:
    if fmt == "structured":
        return json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n"
    lines = []

    def walk(prefix, obj):
        for k, v in obj.items():
            key = f"{prefix}{k}"
            if isinstance(v, dict):
                walk(key + ".", v)
            else:
                lines.append(f"{key}: {_text(v)}")

    walk("", data)
    return "\n".join(lines) + "\n"


def _text(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, list) and v and isinstance(v[0], dict):
        return "; ".join(", ".join(f"{k}={_text(x)}" for k, x in d.items()) for d in v)
    if isinstance(v, list) and v and isinstance(v[0], str):
        return " | ".join(v)
    return str(v)


def _emit(text: str, out_dir: Path | None, name: str):
    sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text, encoding="utf-8")


def _report_name(fmt):
    return "report.json" if fmt == "structured" else "report.txt"


def _solver_config(args) -> SolverConfig:
    kw = {}
    for flag, key in (("grid", "grid"), ("tol_fp", "tol_fp"), ("tol_seq", "tol_seq"),
                      ("damping", "damping"), ("m0", "m0"), ("stages", "max_stages"),
                      ("seed", "seed")):
        val = getattr(args, flag, None)
        if val is not None:
            kw[key] = val
    return SolverConfig(**kw)


# -- commands --------------------------------------------------------------

def hypothesis_summary(rep) -> dict:
    d = rep.as_dict()
    d["tolerances"] = {"probe_rtol": 1e-12, "ratio_threshold": 1.0}
    return d


def cmd_check(args) -> int:
    p = load_problem(args.problem)
    rep = check_hypotheses(p, seed=args.seed if args.seed is not None else 20240101)
    _emit(_render({"hypotheses": hypothesis_summary(rep)}, args.format),
          args.out, _report_name(args.format))
    return EXIT_OK if rep.passed else EXIT_HYPOTHESIS


def _solution_data(report: SolutionReport) -> dict:
    d = report.summary()
    d["tolerances"] = {"envelope": 1e-12}
    return {"solution": d, "hypotheses": hypothesis_summary(report.hypotheses)}


def _write_solution(report: SolutionReport, args):
    _emit(_render(_solution_data(report), args.format), args.out, _report_name(args.format))
    if args.out is not None and report.x is not None and report.envelope_lo_factor1 is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "solution.csv").write_text(solution_csv(report), encoding="utf-8")


def cmd_solve(args) -> int:
    p = load_problem(args.problem)
    report = solve(p, _solver_config(args))
    _write_solution(report, args)
    return EXIT_OK if report.status == "converged" else EXIT_NONCONVERGENCE


def green_table(mu: float, points: int = 21) -> dict:
    """Kernel property suite for one order."""
    order = FracOrder(mu)
    grid = np.linspace(-1.0, 1.0, 201)
    t, tau = np.meshgrid(grid, grid, indexing="ij")
    g = green_eval(t, tau, order)
    asym = float(np.max(np.abs(g - green_eval(-t, -tau, order))))
    bound = (1.0 - np.abs(tau)) ** (mu - 1.0) / order.gamma_mu
    rows = [green_row_integral(s, order) for s in np.linspace(-1.0, 1.0, points)]
    dev = max(abs(r.value - r.derived) / r.derived for r in rows if r.derived > 0)
    ratios = [r.ratio_to_printed for r in rows if r.printed > 0]
    centre = green_row_integral(0.0, order)
    return {
        "mu": mu,
        "min_value": float(g.min()),
        "max_asymmetry": asym,
        "max_bound_violation": float(np.max(g - bound)),
        "max_row_deviation_factor1": dev,
        "max_ratio_error_vs_0.5": max(abs(r - 0.5) for r in ratios),
        "row_integral_at_0": centre.value,
        "printed_form_at_0": centre.printed,
        "ratio_at_0": centre.ratio_to_printed,
    }


def green_ok(row: dict) -> bool:
    return (row["min_value"] >= 0.0 and row["max_asymmetry"] == 0.0
            and row["max_bound_violation"] <= 1e-14 and row["max_row_deviation_factor1"] <= 1e-8
            and row["max_ratio_error_vs_0.5"] <= 1e-8)


def cmd_verify_green(args) -> int:
    try:
        for mu in args.mu:
            FracOrder(mu)
    except FracBVPError as err:
        raise ProblemFileError(str(err), "mu") from err
    rows = {f"mu={mu:g}": green_table(mu) for mu in args.mu}
    for row in rows.values():
        row["pass"] = green_ok(row)
    data = {"green": rows, "tolerances": {"bound": 1e-14, "row_relative": 1e-8, "ratio": 1e-8}}
    _emit(_render(data, args.format), args.out, _report_name(args.format))
    return EXIT_OK if all(r["pass"] for r in rows.values()) else EXIT_HYPOTHESIS


def frac_suite(mu: float) -> dict:
    """Operator identity checks for one order; values are sup errors."""
    from .fracops import SampledFn, bilateral_residual, caputo_left, caputo_right
    from .greens import solve_linear

    order = FracOrder(mu)
    s = np.linspace(0.0, 1.0, 201)
    sm = -s[::-1]
    affine = max(float(np.max(np.abs(caputo_left(SampledFn(s, 0.3 + 1.7 * s), order, s[1:])))),
                 float(np.max(np.abs(caputo_right(SampledFn(sm, 0.3 - 1.7 * sm), order, sm[:-1])))))
    inner = s[(s >= 0.05) & (s <= 0.95)]
    quad = float(np.max(np.abs(caputo_left(SampledFn(s, s ** 2), order, inner)
                               - 2.0 * inner ** (2.0 - mu) / gamma(3.0 - mu))))

    def smooth(t):
        return np.cos(t) + t ** 2

    mirror = float(np.max(np.abs(caputo_right(SampledFn(sm, smooth(sm)), order, sm[:-1])
                                 - caputo_left(SampledFn(s, smooth(-s)), order, s[1:][::-1]))))

    def y(t):
        return 1.0 + 0.5 * np.cos(np.pi * t)

    x = solve_linear(y, order)
    roundtrip = bilateral_residual(x, lambda t, _x: y(t), order).sup
    return {"mu": mu, "affine": affine, "tau_squared": quad, "mirror": mirror,
            "round_trip": roundtrip}


FRAC_TOLERANCES = {"affine": 1e-12, "tau_squared": 1e-3, "mirror": 1e-10, "round_trip": 1e-3}


def cmd_frac_verify(args) -> int:
    try:
        for mu in args.mu:
            FracOrder(mu)
    except FracBVPError as err:
        raise ProblemFileError(str(err), "mu") from err
    rows = {}
    for mu in args.mu:
        row = frac_suite(mu)
        row["pass"] = all(row[k] <= tol for k, tol in FRAC_TOLERANCES.items())
        rows[f"mu={mu:g}"] = row
    data = {"frac": rows, "tolerances": FRAC_TOLERANCES}
    _emit(_render(data, args.format), args.out, _report_name(args.format))
    return EXIT_OK if all(r["pass"] for r in rows.values()) else EXIT_HYPOTHESIS


def example_constants() -> dict:
    """Recompute each reference Example constant."""
    from .problem import check_A1

    unit = example_problem(lam=1.0, R=1.0)
    a1 = check_A1(unit)
    computed = {
        "int (1-|t|)^0.9 q dt / lambda": a1.a1_integral_q,
        "int (1-|t|)^0.9 q u(c(1-|t|^1.9)) dt * c^0.9 / lambda": a1.a1_integral_qu[1.0],
        "chi_1 at lambda = 1": compute_chi(unit, 1.0),
        "Gamma(2.9)/2": gamma(2.9) / 2.0,
        "11.8713^10": 11.8713 ** 10,
    }
    out = {}
    for name, (printed, tol) in EXAMPLE_CONSTANTS.items():
        val = computed[name]
        rel = abs(val - printed) / abs(printed) if val is not None else math.inf
        out[name] = {"computed": val, "printed": printed, "relative_error": rel,
                     "tolerance": tol, "pass": rel <= tol}
    return out


def cmd_reproduce_example(args) -> int:
    consts = example_constants()
    p = example_problem(lam=1e-16, R=1.0)
    t0 = time.perf_counter()
    report = solve(p, _solver_config(args))
    elapsed = time.perf_counter() - t0
    sol = _solution_data(report)
    solve_ok = (report.status == "converged" and report.symmetry_defect == 0.0
                and report.positivity_margin is not None and report.positivity_margin > 0.0)
    data = {"constants": consts, **sol, "solve_seconds": elapsed, "solve_pass": solve_ok}
    _emit(_render(data, args.format), args.out, _report_name(args.format))
    if args.out is not None and report.x is not None:
        (args.out / "solution.csv").write_text(solution_csv(report), encoding="utf-8")
    return EXIT_OK if solve_ok and all(c["pass"] for c in consts.values()) else EXIT_HYPOTHESIS


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fracsbvp",
        description="Symmetric positive solutions of a singular bilateral Caputo BVP.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="probe seed")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--grid", type=int, default=None, help="odd number of grid nodes")
    solver.add_argument("--tol-fp", dest="tol_fp", type=float, default=None)
    solver.add_argument("--tol-seq", dest="tol_seq", type=float, default=None)
    solver.add_argument("--damping", type=float, default=None)
    solver.add_argument("--m0", type=int, default=None)
    solver.add_argument("--stages", type=int, default=None, help="maximum number of m stages")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", parents=[common], help="check hypotheses (A1)/(A2)")
    c.add_argument("problem", type=Path)
    c.set_defaults(func=cmd_check)
    s = sub.add_parser("solve", parents=[common, solver], help="solve a problem file")
    s.add_argument("problem", type=Path)
    s.set_defaults(func=cmd_solve)
    mus = [1.1, 1.5, 1.9, 2.0]
    g = sub.add_parser("verify-green", parents=[common], help="kernel property suite")
    g.add_argument("--mu", type=float, nargs="+", default=mus)
    g.set_defaults(func=cmd_verify_green)
    f = sub.add_parser("frac-verify", parents=[common], help="fractional operator identities")
    f.add_argument("--mu", type=float, nargs="+", default=mus)
    f.set_defaults(func=cmd_frac_verify)
    e = sub.add_parser("reproduce-example", parents=[common, solver],
                       help="recompute the worked example constants and solve it")
    e.set_defaults(func=cmd_reproduce_example)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ProblemFileError, FracBVPError, ValueError) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
