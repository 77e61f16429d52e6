"""Acceptance criteria, one summary line each (see the terminal summary)."""
import json
import math
import time

import numpy as np
import pytest

from conftest import record_acceptance
from halfspace_hls import cli
from halfspace_hls.discretization import build_ball_quadrature, build_sphere_mesh
from halfspace_hls.exponents import critical_config
from halfspace_hls.extremals import closed_form_constant_alpha2, quadrature_constant
from halfspace_hls.operators import DiscreteOperator
from halfspace_hls.optimize import classify_extremal, find_extremal, random_positive_field
from halfspace_hls.verify import (
    check_exponents,
    check_harmonic_extension,
    check_kelvin,
    check_log_hls,
    check_mean_value,
    check_scaling,
    check_symmetrization,
    check_trace_representation,
    check_young,
)

# tolerances as stated by the acceptance criteria
CONSTANT_RTOL = 0.005
CONSTANT_SECONDS = 60.0
VARIATIONAL_RTOL = 0.02
VARIATIONAL_CAP = 1.02
VARIATIONAL_SECONDS = 300.0
MEAN_VALUE_TOL = 1e-4
MEAN_VALUE_CONTROL = 0.05
ALGEBRA_TOL = 1e-12
KELVIN_TOL = 0.02
KELVIN_INFLATION = 10.0
CRITICAL_SLOPE_TOL = 0.02
SUBCRITICAL_SLOPE = 0.25
SUBCRITICAL_SLOPE_TOL = 0.03
LAPLACIAN_ORDER = 1.8
TRACE_TOL = 0.01
LOG_HLS_TOL = 1e-3
SYMMETRIZATION_TOL = 1e-6
EXPONENT_TOL = 1e-12
RIESZ_NORM_TOL = 1e-10


def _mark(ok):
    return "ok" if ok else "FAILED"


def test_01_constant_closed_form_vs_quadrature():
    parts, ok = [], True
    for n in (3, 4):
        t0 = time.perf_counter()
        est = quadrature_constant(n, 2.0, build_ball_quadrature(n, 16, 24),
                                  build_sphere_mesh(n, 24))
        secs = time.perf_counter() - t0
        rel = abs(est.value / closed_form_constant_alpha2(n) - 1)
        good = rel <= CONSTANT_RTOL and (n != 3 or secs < CONSTANT_SECONDS)
        ok &= good
        parts.append(f"n={n} rel={rel:.1e} t={secs:.2f}s {_mark(good)}")
    record_acceptance(1, "sharp constant, closed form vs quadrature", ok, "; ".join(parts))
    assert ok


def test_02_constant_variational_route(ball_op, cfg32):
    t0 = time.perf_counter()
    res = find_extremal(random_positive_field(ball_op.source, seed=0), ball_op, tol=1e-7)
    secs = time.perf_counter() - t0
    c = closed_form_constant_alpha2(3)
    rel = res.constant_estimate / c - 1
    cap = max(res.ratios) / c
    _, fit = classify_extremal(res.field, cfg32)
    ok = (res.converged and abs(rel) <= VARIATIONAL_RTOL and cap <= VARIATIONAL_CAP
          and secs < VARIATIONAL_SECONDS)
    record_acceptance(2, "sharp constant, variational route", ok,
                      f"converged={res.converged} in {res.iterations} steps, rel={rel:.1e}, "
                      f"max ratio/C={cap:.9f}, bubble fit {fit:.1e}, t={secs:.1f}s")
    assert ok


def test_03_mean_value_property():
    res = check_mean_value(points=20, tol=MEAN_VALUE_TOL)
    ctrl = res.details["control_spread"]
    ok = res.residual <= MEAN_VALUE_TOL and ctrl >= MEAN_VALUE_CONTROL
    record_acceptance(3, "mean-value property", ok,
                      f"spread={res.residual:.1e}, control spread (alpha=1.5)={ctrl:.3f}")
    assert ok


def test_04_kelvin():
    coarse = check_kelvin(pairs=10_000, refinement=0, tol=KELVIN_TOL)
    fine = check_kelvin(pairs=10_000, refinement=1, tol=KELVIN_TOL)
    d = coarse.details
    algebra = (d["distance_identity"] <= ALGEBRA_TOL and d["involution"] <= ALGEBRA_TOL
               and d["p_kernel_min"] > 0)
    shrink = all(fine.details[k] < d[k] for k in ("K1", "K3"))
    ok = (algebra and coarse.residual <= KELVIN_TOL and shrink
          and d["inflation"] >= KELVIN_INFLATION)
    record_acceptance(4, "Kelvin algebra and identities", ok,
                      f"distance {d['distance_identity']:.1e}, involution {d['involution']:.1e}, "
                      f"P min {d['p_kernel_min']:.1e}; K1 {d['K1']:.1e}->{fine.details['K1']:.1e}, "
                      f"K3 {d['K3']:.1e}->{fine.details['K3']:.1e}; control x{d['inflation']:.0f}")
    assert ok


def test_05_scaling_law():
    res = check_scaling(tol=CRITICAL_SLOPE_TOL)
    crit = res.details["critical_slope"]
    sub = res.details["subcritical_slope"]
    ok = (abs(crit) <= CRITICAL_SLOPE_TOL
          and abs(sub - SUBCRITICAL_SLOPE) <= SUBCRITICAL_SLOPE_TOL
          and res.details["subcritical_analytic"] == pytest.approx(SUBCRITICAL_SLOPE))
    record_acceptance(5, "scaling law", ok, f"critical slope {crit:+.4f}, subcritical {sub:.4f} "
                      f"(analytic {res.details['subcritical_analytic']})")
    assert ok


def test_06_harmonic_extension():
    res = check_harmonic_extension()
    orders = res.details["laplacian_orders"]
    neu = res.details["neumann"]
    lap_ok = min(orders) >= LAPLACIAN_ORDER
    neu_ok = neu[-1] < neu[0] and neu[-1] <= 0.01
    ok = lap_ok and neu_ok
    record_acceptance(6, "harmonic extension", ok,
                      f"Laplacian orders {', '.join(f'{o:.2f}' for o in orders)} "
                      f"{_mark(lap_ok)}; Neumann residuals "
                      f"{', '.join(f'{v:.4f}' for v in neu)} {_mark(neu_ok)} "
                      f"(-d_n u / f -> {res.details['normal_derivative_factor'][-1]:.4f})")
    assert ok


def test_07_trace_representation():
    parts, ok = [], True
    for test_id in ("interior_bump", "boundary_bump"):
        res = check_trace_representation(test_id, points=10, tol=TRACE_TOL)
        ok &= res.residual <= TRACE_TOL
        parts.append(f"{test_id} {res.residual:.1e}")
    record_acceptance(7, "trace representation", ok, ", ".join(parts))
    assert ok


def test_08_inequality_suites():
    young = [check_young(2.0, 2.0, math.inf, trials=20),
             check_young(4 / 3, 4 / 3, 2.0, trials=20)]
    log = check_log_hls(trials=100, tol=LOG_HLS_TOL)
    sym = check_symmetrization(fields=50, tol=SYMMETRIZATION_TOL)
    young_ok = all(r.passed for r in young)
    log_ok = log.details["min_slack"] >= -LOG_HLS_TOL
    sym_ok = sym.residual <= SYMMETRIZATION_TOL
    ok = young_ok and log_ok and sym_ok
    record_acceptance(8, "inequality suites", ok,
                      f"Young max lhs/rhs {max(max(r.details['ratios']) for r in young):.3f} "
                      f"{_mark(young_ok)}; log-HLS min slack {log.details['min_slack']:.3f} "
                      f"({log.details['negative_trials']}/100 below) {_mark(log_ok)}; "
                      f"symmetrization worst loss {sym.residual:.1e} {_mark(sym_ok)}")
    assert ok


def test_09_exponent_algebra():
    res = check_exponents(points=200, tol=EXPONENT_TOL)
    c32 = res.details["riesz_norm_3_2_error"]
    ok = res.residual <= EXPONENT_TOL and c32 <= RIESZ_NORM_TOL
    record_acceptance(9, "exponent algebra", ok,
                      f"max invariant residual {res.residual:.1e}, |c(3,2) - 4 pi| = {c32:.1e}")
    assert ok


RUNS = [
    ["constant", "--method", "all", "--level", "12", "--radial-order", "8"],
    ["constant", "--method", "all", "--level", "12", "--radial-order", "8", "--format", "json"],
    ["optimize", "--level", "12", "--radial-order", "8", "--seed", "5"],
    ["sweep", "--grid", "scaled", "--lambdas", "0.5,2"],
    ["sweep", "--mode", "alpha", "--level", "12", "--radial-order", "8", "--format", "json"],
    ["verify", "exponents", "mean_value", "trace", "--seed", "3"],
]


def test_10_determinism(tmp_path):
    same, names = True, []
    for k, args in enumerate(RUNS):
        blobs = []
        for rep in range(2):
            out = tmp_path / f"run{k}_{rep}"
            code = cli.main(args + ["--out", str(out)])
            assert code in (0, 1)
            blob = out.read_bytes()
            side = out.with_name(out.name + ".summary.json")
            if side.exists():
                blob += side.read_bytes()
            blobs.append(blob)
        if args[-1] == "json" or args[0] == "verify":
            json.loads(blobs[0])
        same &= blobs[0] == blobs[1]
        names.append(args[0])
    record_acceptance(10, "determinism", same,
                      f"{len(RUNS)} invocations ({', '.join(names)}) byte-identical on rerun")
    assert same
