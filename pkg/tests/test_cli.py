import csv
import io
import json
import subprocess
import sys

import pytest

from halfspace_hls import cli
from halfspace_hls.extremals import closed_form_constant_alpha2


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_closed_form_row(capsys):
    code, out, _ = run(["constant", "--method", "closed_form"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert float(row["value"]) == closed_form_constant_alpha2(3)
    assert row["wall_ms"] == "" and row["method"] == "closed_form"
    assert out.endswith("\r\n")


def test_constant_all_methods_agree(capsys):
    code, out, _ = run(["constant", "--method", "all", "--level", "12", "--radial-order", "8"],
                       capsys)
    assert code == 0
    table = rows(out)
    values = {r["method"]: float(r["value"]) for r in table if ":" not in r["method"]}
    assert set(values) == {"closed_form", "quadrature", "optimize"}
    spreads = [float(r["value"]) for r in table if r["method"].startswith("spread:")]
    assert len(spreads) == 3 and max(spreads) < 0.02


def test_quadrature_near_alpha_endpoint(capsys):
    code, out, _ = run(["constant", "--alpha", "1.2", "--method", "quadrature",
                        "--level", "12", "--radial-order", "8"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert float(row["value"]) > 0 and float(row["est_error"]) >= 0


@pytest.mark.parametrize("args", [
    ["constant", "--alpha", "1.5", "--method", "closed_form"],
    ["constant", "--alpha", "3.5"],
    ["sweep", "--lambdas", ""],
    ["sweep", "--mode", "alpha", "--alphas", ""],
    ["verify", "no_such_check"],
    ["verify"],
    ["optimize", "--p", "1.2", "--max-iter", "2"],
    ["constant", "--bogus"],
])
def test_usage_errors_exit_2(args, capsys):
    code, _, err = run(args, capsys)
    assert code == 2 and err


def test_verify_single_check_and_tolerance_control(capsys):
    code, out, _ = run(["verify", "mean_value"], capsys)
    assert code == 0
    report = json.loads(out)
    assert [r["check"] for r in report] == ["mean_value"] and report[0]["pass"] is True
    code, out, _ = run(["verify", "mean_value", "--tol", "0"], capsys)
    assert code == 1 and json.loads(out)[0]["pass"] is False


def test_alpha_sweep_is_monotone(capsys):
    code, out, _ = run(["sweep", "--mode", "alpha", "--level", "12", "--radial-order", "8"],
                       capsys)
    assert code == 0
    vals = [float(r["value"]) for r in rows(out)]
    assert len(vals) == 3 and vals[0] > vals[1] > vals[2]


def test_scaling_sweep_footer(capsys):
    code, out, _ = run(["sweep", "--grid", "scaled", "--p", "1.3333333333333333", "--q", "4",
                        "--lambdas", "0.5,1,2"], capsys)
    assert code == 0
    table = list(csv.reader(io.StringIO(out)))
    assert table[0] == ["lambda", "ratio"] and len(table) == 6
    footer = dict(table[-2:])
    assert float(footer["fitted_exponent"]) == pytest.approx(0.25, abs=1e-9)
    assert float(footer["analytic_exponent"]) == pytest.approx(0.25)


def test_optimize_writes_table_and_summary(tmp_path, capsys):
    out = tmp_path / "opt.csv"
    code, _, _ = run(["optimize", "--level", "8", "--radial-order", "6", "--out", str(out)],
                     capsys)
    assert code == 0
    table = rows(out.read_text())
    assert list(table[0]) == ["iter", "ratio", "step_residual", "wall_ms"]
    summary = json.loads((tmp_path / "opt.csv.summary.json").read_text())
    assert set(summary) == {"constant_estimate", "iterations", "converged"}
    assert summary["iterations"] == len(table) - 1


def test_timing_fills_wall_clock(capsys):
    _, out, _ = run(["constant", "--method", "closed_form", "--timing"], capsys)
    assert rows(out)[0]["wall_ms"] != ""


def test_config_precedence(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"n": 4, "method": "closed_form"}))
    _, out, _ = run(["constant", "--config", str(conf)], capsys)
    assert rows(out)[0]["n"] == "4"
    _, out, _ = run(["constant", "--config", str(conf), "--n", "3"], capsys)
    assert rows(out)[0]["n"] == "3"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    code, _, err = run(["constant", "--config", str(bad)], capsys)
    assert code == 2 and "colour" in err


def test_thread_count_resolution(monkeypatch):
    ns = cli.build_parser().parse_args(["constant"])
    monkeypatch.setenv("HLS_THREADS", "3")
    assert cli.resolve_settings(ns)["threads"] == 3
    ns = cli.build_parser().parse_args(["constant", "--threads", "2"])
    assert cli.resolve_settings(ns)["threads"] == 2
    monkeypatch.delenv("HLS_THREADS")
    ns = cli.build_parser().parse_args(["constant"])
    assert cli.resolve_settings(ns)["threads"] >= 1


def test_thread_count_does_not_change_results(tmp_path, capsys):
    outs = []
    for t in ("1", "2"):
        path = tmp_path / f"t{t}.csv"
        run(["optimize", "--level", "8", "--radial-order", "6", "--threads", t,
             "--max-iter", "20", "--out", str(path)], capsys)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_installed_entry_point():
    proc = subprocess.run([sys.executable, "-m", "halfspace_hls.cli", "constant", "--method",
                           "closed_form", "--format", "json"], capture_output=True, text=True,
                          check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["rows"][0]["value"] == closed_form_constant_alpha2(3)


def test_verify_all_with_seed_7(capsys):
    code, out, _ = run(["verify", "--all", "--seed", "7"], capsys)
    report = {r["check"]: r["pass"] for r in json.loads(out)}
    assert list(report) == list(cli.CHECKS)
    assert code == (0 if all(report.values()) else 1)
    failing = sorted(k for k, v in report.items() if not v)
    assert failing == [], f"failing checks: {failing}"
