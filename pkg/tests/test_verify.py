import json
import math

import numpy as np
import pytest

from halfspace_hls.exponents import critical_config
from halfspace_hls.extremals import BubbleParams
from halfspace_hls.verify import (
    CHECKS,
    CheckResult,
    VerifyError,
    check_exponents,
    check_harmonic_extension,
    check_kelvin,
    check_log_hls,
    check_mean_value,
    check_symmetrization,
    check_trace_representation,
    check_young,
    harmonic_extension_residuals,
    report_json,
    run_checks,
    trace_residual,
)


def test_mean_value_and_control():
    res = check_mean_value(points=12)
    assert res.passed
    assert res.details["mean"] == pytest.approx(4 * math.pi, rel=1e-10)
    assert res.details["control_spread"] > 0.05


def test_mean_value_fails_when_tolerance_is_zero():
    assert not check_mean_value(points=12, tol=0.0).passed


def test_kelvin_check_light():
    res = check_kelvin(samples=4, pairs=2000)
    assert res.passed
    d = res.details
    assert d["distance_identity"] <= 1e-12 and d["involution"] <= 1e-12
    assert d["p_kernel_min"] > 0 and d["inflation"] >= 10


def test_harmonic_extension_of_zero_is_zero():
    pts = np.array([[0.1, 0.2, 0.7]])
    bdy = np.array([[0.1, 0.2, 0.0]])
    lap, neu, _ = harmonic_extension_residuals(None, 3, 0.1, pts, bdy)
    assert lap == 0.0 and neu == 0.0


def test_harmonic_extension_laplacian_is_second_order():
    res = check_harmonic_extension(points=4)
    assert min(res.details["laplacian_orders"]) >= 1.8


def test_normal_derivative_follows_the_single_layer_jump():
    # for n = 3, d/dx_n of int f(y) / |x - y| dy tends to -2 pi f on the boundary,
    # so after dividing by 4 pi the normal derivative factor is 1/2
    res = check_harmonic_extension(points=4)
    factors = res.details["normal_derivative_factor"]
    assert abs(factors[-1] - 0.5) < abs(factors[0] - 0.5)
    assert factors[-1] == pytest.approx(0.5, abs=2e-3)


def test_harmonic_extension_rejects_other_alpha():
    with pytest.raises(VerifyError):
        check_harmonic_extension(alpha=1.5)


@pytest.mark.parametrize("test_id", ["interior_bump", "boundary_bump"])
def test_trace_representation(test_id):
    res = check_trace_representation(test_id)
    assert res.passed and res.residual <= 1e-2


def test_trace_far_from_support_is_zero_on_both_sides():
    far = np.array([[5.0, 0.0, 0.0], [0.0, -4.0, 0.0]])
    res, lhs, rhs = trace_residual("boundary_bump", far)
    assert np.all(lhs == 0) and res < 1e-12


def test_trace_unknown_test_and_dimension():
    with pytest.raises(VerifyError):
        trace_residual("hat", np.zeros((1, 3)))
    with pytest.raises(VerifyError):
        check_trace_representation(n=2)


def test_log_hls_uniform_pair_and_concentration_trend():
    res = check_log_hls(trials=5)
    assert res.details["uniform_slack"] >= 0
    trend = [res.details["concentration_trend"][s] for s in (1.0, 0.7, 0.5, 0.35)]
    assert all(b < a for a, b in zip(trend, trend[1:]))


def test_young_holds_and_validates_exponents():
    assert check_young(trials=5).passed
    assert check_young(4 / 3, 4 / 3, 2.0, trials=5).passed
    with pytest.raises(VerifyError):
        check_young(2.0, 2.0, 2.0)


def test_young_tolerance_is_enforced():
    # observed ratios sit near 0.7; demanding lhs <= 0.5 rhs must fail
    res = check_young(trials=5, tol=-0.5)
    assert not res.passed and max(res.details["ratios"]) > 0.5


def test_symmetrization():
    res = check_symmetrization(fields=10)
    assert res.passed
    assert res.details["two_bump"][1] > res.details["two_bump"][0]
    assert res.details["radial_relative_change"] <= 1e-10


def test_exponents_check():
    res = check_exponents()
    assert res.passed and res.residual <= 1e-12
    assert res.details["riesz_norm_3_2_error"] <= 1e-10


def test_registry_and_json_report():
    assert list(CHECKS) == ["exponents", "mean_value", "kelvin", "scaling",
                            "harmonic_extension", "trace", "log_hls", "young",
                            "symmetrization"]
    with pytest.raises(VerifyError, match="unknown"):
        run_checks(["nope"])
    results = run_checks(["exponents"], seed=3)
    data = json.loads(report_json(results))
    assert set(data[0]) == {"check", "pass", "residual", "tolerance", "refinement", "seed",
                            "details"}
    assert data[0]["pass"] is True and data[0]["seed"] == 3


def test_check_result_dict():
    r = CheckResult("x", False, 1.0, 0.5, 0, 1, {"a": np.float64(2.0)})
    d = r.to_dict()
    assert d["pass"] is False and "passed" not in d
