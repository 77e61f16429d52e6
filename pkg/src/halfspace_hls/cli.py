"""Command-line front end: ``hls constant | optimize | sweep | verify``.

Settings are resolved as flags > JSON config file (``--config``) > built-in
defaults. Outputs are CSV tables or JSON reports; given identical flags and
seed they are byte-identical (wall-clock columns stay empty unless
``--timing`` is passed). Exit codes: 0 success, 1 check or numerical
failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from typing import Sequence

from .discretization import build_ball_quadrature, build_sphere_mesh
from .exponents import (
    ExponentConfig,
    ExponentError,
    critical_config,
    derive_exponents,
    general_config,
)
from .extremals import (
    BubbleParams,
    ExtremalError,
    closed_form_constant_alpha2,
    quadrature_constant,
)
from .operators import DiscreteOperator, OperatorError
from .optimize import OptimizeError, find_extremal, random_positive_field, scaling_sweep
from .verify import CHECKS, VerifyError, report_json, run_checks

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "n": 3,
    "alpha": 2.0,
    "p": None,
    "q": None,
    "seed": 0,
    "threads": None,
    "out": None,
    "format": None,
    "timing": False,
    "tol": None,
    "level": 24,
    "radial_order": 16,
    "method": "all",
    "max_iter": 200,
    "force": False,
    "mode": "scaling",
    "alphas": [1.25, 1.5, 1.75],
    "lambdas": [0.5, 1.0, 2.0, 5.0],
    "grid": "polar",
    "refinement": 0,
    "all": False,
    "checks": [],
}


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 2."""


# ---------------------------------------------------------------- parsing

def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text}") from exc
    return vals


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    c.add_argument("--n", type=int, default=s, help="dimension of the half space")
    c.add_argument("--alpha", type=float, default=s, help="kernel order, 1 < alpha < n")
    c.add_argument("--p", type=float, default=s,
                   help="boundary exponent (default: the critical one)")
    c.add_argument("--config", default=s, help="JSON file with default settings")
    c.add_argument("--seed", type=int, default=s)
    c.add_argument("--threads", type=int, default=s,
                   help="worker threads (fallback: HLS_THREADS, then CPU count)")
    c.add_argument("--out", default=s, help="output file (default: stdout)")
    c.add_argument("--format", choices=("csv", "json"), default=s)
    c.add_argument("--timing", action="store_true", default=s,
                   help="fill wall-clock columns (makes output non-reproducible)")
    c.add_argument("--tol", type=float, default=s, help="override check/stop tolerance")
    c.add_argument("--level", type=int, default=s, help="sphere mesh level")
    c.add_argument("--radial-order", dest="radial_order", type=int, default=s,
                   help="radial Gauss order of the ball rule")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="hls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    s = argparse.SUPPRESS

    pc = sub.add_parser("constant", parents=[common], help="sharp constant by one or more methods")
    pc.add_argument("--method", choices=("closed_form", "quadrature", "optimize", "all"),
                    default=s)

    po = sub.add_parser("optimize", parents=[common], help="fixed-point search on the ball")
    po.add_argument("--max-iter", dest="max_iter", type=int, default=s)
    po.add_argument("--force", action="store_true", default=s,
                    help="allow non-critical exponents")

    ps = sub.add_parser("sweep", parents=[common], help="alpha table or dilation sweep")
    ps.add_argument("--mode", choices=("alpha", "scaling"), default=s)
    ps.add_argument("--alphas", type=_float_list, default=s)
    ps.add_argument("--lambdas", type=_float_list, default=s)
    ps.add_argument("--q", type=float, default=s, help="volume exponent (scaling mode)")
    ps.add_argument("--grid", choices=("polar", "scaled"), default=s)

    pv = sub.add_parser("verify", parents=[common], help="run analytic checks")
    pv.add_argument("checks", nargs="*", default=s, metavar="CHECK",
                    help=f"any of: {', '.join(CHECKS)}")
    pv.add_argument("--all", action="store_true", default=s)
    pv.add_argument("--refinement", type=int, default=s)
    return parser


def resolve_settings(ns: argparse.Namespace) -> dict:
    """Merge defaults, the optional JSON config and explicit flags."""
    settings = dict(DEFAULTS)
    flags = vars(ns)
    path = flags.get("config")
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        settings.update({k.replace("-", "_"): v for k, v in cfg.items()})
    settings.update({k: v for k, v in flags.items() if k != "config"})
    if settings["threads"] is None:
        env = os.environ.get("HLS_THREADS")
        settings["threads"] = int(env) if env else (os.cpu_count() or 1)
    return settings


def exponent_config(st: dict) -> ExponentConfig:
    n, alpha = int(st["n"]), float(st["alpha"])
    if st.get("p") is None:
        return critical_config(n, alpha)
    if st.get("q") is not None:
        return general_config(n, alpha, float(st["p"]), float(st["q"]))
    return derive_exponents(n, alpha, float(st["p"]))


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def table_json(header: Sequence[str], rows: Sequence[Sequence], extra: dict | None = None) -> str:
    doc = {"rows": [dict(zip(header, row)) for row in rows]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _clock(st: dict):
    t0 = time.perf_counter()
    return lambda: round(1e3 * (time.perf_counter() - t0), 3) if st["timing"] else None


# ---------------------------------------------------------------- commands

def _ball_operator(cfg: ExponentConfig, st: dict) -> DiscreteOperator:
    sphere = build_sphere_mesh(cfg.n, int(st["level"]))
    ball = build_ball_quadrature(cfg.n, int(st["radial_order"]), int(st["level"]))
    return DiscreteOperator(sphere, ball, cfg, threads=st["threads"])


def cmd_constant(st: dict) -> int:
    """Rows ``n, alpha, method, value, est_error, wall_ms``."""
    cfg = exponent_config(st)
    if not cfg.is_critical:
        raise UsageError("the sharp constant is defined at the critical exponents")
    n, alpha = cfg.n, cfg.alpha
    method = st["method"]
    exact2 = math.isclose(alpha, 2.0, abs_tol=1e-14)
    if method == "closed_form" and not exact2:
        raise UsageError("the closed form is only available for alpha = 2")
    methods = [method] if method != "all" else (
        ["closed_form", "quadrature", "optimize"] if exact2 else ["quadrature", "optimize"])
    rows, values = [], {}
    for m in methods:
        clock = _clock(st)
        if m == "closed_form":
            val, err = closed_form_constant_alpha2(n), 0.0
        elif m == "quadrature":
            lvl, ro = int(st["level"]), int(st["radial_order"])
            est = quadrature_constant(n, alpha, build_ball_quadrature(n, ro, lvl),
                                      build_sphere_mesh(n, lvl))
            val, err = est.value, est.est_error
        else:
            op = _ball_operator(cfg, st)
            tol = 1e-7 if st["tol"] is None else float(st["tol"])
            res = find_extremal(random_positive_field(op.source, int(st["seed"])), op,
                                tol=tol, max_iter=int(st["max_iter"]))
            val = res.constant_estimate
            err = abs(res.ratios[-1] - res.ratios[-2]) if len(res.ratios) > 1 else float("nan")
        values[m] = val
        rows.append([n, alpha, m, val, err, clock()])
    if method == "all":
        keys = list(values)
        for i, a in enumerate(keys):
            for b in keys[i + 1:]:
                spread = abs(values[a] - values[b]) / abs(values[b])
                rows.append([n, alpha, f"spread:{a}-{b}", spread, None, None])
    header = ["n", "alpha", "method", "value", "est_error", "wall_ms"]
    fmt = st["format"] or "csv"
    emit(table_csv(header, rows) if fmt == "csv" else table_json(header, rows), st["out"])
    return EXIT_OK


def cmd_optimize(st: dict) -> int:
    """Per-iteration table plus the final summary."""
    cfg = exponent_config(st)
    try:
        op = _ball_operator(cfg, st)
        tol = 1e-7 if st["tol"] is None else float(st["tol"])
        res = find_extremal(random_positive_field(op.source, int(st["seed"])), op, tol=tol,
                            max_iter=int(st["max_iter"]), force=bool(st["force"]),
                            timing=bool(st["timing"]))
    except OptimizeError as exc:
        if not cfg.is_critical and not st["force"]:
            raise UsageError(str(exc)) from exc
        raise
    header = ["iter", "ratio", "step_residual", "wall_ms"]
    rows = [[r.iter, r.ratio, r.step_residual, r.wall_ms] for r in res.records]
    summary = res.summary()
    if (st["format"] or "csv") == "csv":
        emit(table_csv(header, rows), st["out"])
        text = json.dumps(summary, sort_keys=True) + "\n"
        if st["out"]:
            emit(text, st["out"] + ".summary.json")
        else:
            sys.stderr.write(text)
    else:
        emit(table_json(header, rows, {"summary": summary}), st["out"])
    return EXIT_OK


def cmd_sweep(st: dict) -> int:
    """Alpha table of constants, or a dilation sweep with the fitted exponent."""
    fmt = st["format"] or "csv"
    n = int(st["n"])
    if st["mode"] == "alpha":
        alphas = list(st["alphas"])
        if not alphas:
            raise UsageError("empty alpha list")
        rows = []
        for a in alphas:
            critical_config(n, a)
            clock = _clock(st)
            lvl, ro = int(st["level"]), int(st["radial_order"])
            est = quadrature_constant(n, a, build_ball_quadrature(n, ro, lvl),
                                      build_sphere_mesh(n, lvl))
            rows.append([n, a, est.value, est.est_error, clock()])
        header = ["n", "alpha", "value", "est_error", "wall_ms"]
        emit(table_csv(header, rows) if fmt == "csv" else table_json(header, rows), st["out"])
        return EXIT_OK
    lambdas = list(st["lambdas"])
    if not lambdas:
        raise UsageError("empty lambda list")
    cfg = exponent_config(st)
    res = scaling_sweep(cfg, BubbleParams.unit(n), lambdas, grid=st["grid"],
                        threads=st["threads"])
    header = ["lambda", "ratio"]
    rows = [[lam, r] for lam, r in zip(res.lambdas, res.ratios)]
    if fmt == "csv":
        rows.append(["fitted_exponent", res.fitted_exponent])
        rows.append(["analytic_exponent", res.analytic_exponent])
        emit(table_csv(header, rows), st["out"])
    else:
        emit(table_json(header, rows, {"fitted_exponent": res.fitted_exponent,
                                       "analytic_exponent": res.analytic_exponent}),
             st["out"])
    return EXIT_OK


def cmd_verify(st: dict) -> int:
    names = [] if st["all"] else list(st["checks"])
    if not names and not st["all"]:
        raise UsageError("name at least one check or pass --all")
    unknown = [k for k in names if k not in CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(unknown)}; known: {', '.join(CHECKS)}")
    results = run_checks(names, seed=int(st["seed"]), refinement=int(st["refinement"]),
                         tol=st["tol"])
    if (st["format"] or "json") == "json":
        emit(report_json(results) + "\n", st["out"])
    else:
        header = ["check", "pass", "residual", "tolerance", "refinement", "seed"]
        rows = [[r.check, r.passed, r.residual, r.tolerance, r.refinement, r.seed]
                for r in results]
        emit(table_csv(header, rows), st["out"])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {"constant": cmd_constant, "optimize": cmd_optimize, "sweep": cmd_sweep,
            "verify": cmd_verify}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        st = resolve_settings(ns)
        os.environ["HLS_THREADS"] = str(st["threads"])
        return COMMANDS[ns.command](st)
    except (UsageError, ExponentError, VerifyError) as exc:
        sys.stderr.write(f"hls: error: {exc}\n")
        return EXIT_USAGE
    except (OptimizeError, OperatorError, ExtremalError, FloatingPointError) as exc:
        sys.stderr.write(f"hls: numerical failure: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
