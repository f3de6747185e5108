"""Command-line interface: output formats and exit codes."""

from __future__ import annotations

import io
import math
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tcfbm.cli import HEADER, MC_EXTRA, TablePlan, UsageError, fmt, run
from tcfbm.moments import moment_U
from tcfbm.subordinators import StableMixture, TemperedStable
from tcfbm.tfbm import TfbmModel, cov_Z

STABLE = ["--family", "stable", "--alpha", "0.5"]
TEMPERED = ["--family", "tempered", "--alpha", "0.5", "--a", "1"]
MIXTURE = ["--family", "mixture", "--alpha1", "0.3", "--alpha2", "0.8", "--c1", "0.4", "--c2", "0.6"]


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


# --- eval ------------------------------------------------------------------------------


def test_brownian_stable_correlation_example():
    code, out, _ = call("eval", "corr", *STABLE, "--hurst", "0.5", "--sigma2", "1", "--t", "4", "--s", "1")
    assert code == 0
    assert out == "0.7071067811865476\n"


def test_drift_variance_example():
    code, out, _ = call("eval", "var", "--family", "drift", "--mu", "1", "--hurst", "0.7", "--sigma2", "2", "--t", "1")
    assert code == 0
    assert out == "2\n"


def test_eval_matches_library():
    code, out, _ = call("eval", "cov", *TEMPERED, "--hurst", "0.3", "--sigma2", "1.5", "--t", "2", "--s", "0.5")
    assert code == 0
    assert float(out) == cov_Z(TfbmModel(0.3, 1.5, TemperedStable(0.5, 1.0)), 2.0, 0.5)


def test_eval_moment_needs_no_hurst_for_y_quantities():
    code, out, _ = call("eval", "moment", *MIXTURE, "--kappa", "2", "--t", "3", "--hurst", "0.5", "--sigma2", "1")
    assert code == 0
    assert float(out) == moment_U(StableMixture(0.3, 0.8, 0.4, 0.6), 2.0, 3.0)


@pytest.mark.parametrize(
    "extra",
    [
        ["eval", "cov-y", *STABLE, "--t", "2", "--s", "1"],
        ["eval", "increment-moment", *STABLE, "--kappa", "1.5", "--t", "2", "--s", "1"],
        ["eval", "increment-moment", *STABLE, "--m", "2", "--t", "2", "--s", "1"],
        ["eval", "increment-cov", *STABLE, "--t", "1", "--v", "3"],
    ],
)
def test_every_eval_quantity_runs(extra):
    code, out, err = call(*extra, "--hurst", "0.3", "--sigma2", "1")
    assert code == 0, err
    assert math.isfinite(float(out))


# --- exit codes ----------------------------------------------------------------------------


@pytest.mark.parametrize(
    "argv,fragment",
    [
        (["eval", "cov", *STABLE, "--hurst", "0.3", "--t", "2", "--s", "1"], "--sigma2"),
        (["eval", "cov", "--family", "stable", "--alpha", "1.5", "--hurst", "0.3", "--sigma2", "1", "--t", "2", "--s", "1"], "--family stable"),
        (["eval", "kurtosis"], "kurtosis"),
        (["eval", "increment-moment", *STABLE, "--hurst", "0.3", "--sigma2", "1", "--t", "2", "--s", "1"], "--kappa"),
        (["eval", "cov", *STABLE, "--hurst", "0.3", "--sigma2", "1", "--t", "2", "--s", "1", "--config", "/nonexistent/x"], "--config"),
        (["table", "var", *STABLE, "--hurst", "0.3", "--sigma2", "1", "--t-start", "3", "--t-stop", "1", "--t-count", "3"], "--t-start"),
        (["mc", "validate", "--quantity", "moment", *STABLE, "--hurst", "0.3", "--sigma2", "1", "--t", "1", "--reps", "200", "--seed", "1"], "moment"),
    ],
)
def test_usage_errors_exit_2(argv, fragment):
    code, out, err = call(*argv)
    assert code == 2
    assert out == ""
    assert fragment in err


def test_numerical_failure_exits_1_with_context():
    code, _, err = call("eval", "corr", *STABLE, "--hurst", "0.3", "--sigma2", "1", "--t", "4", "--s", "0")
    assert code == 1
    assert "(stable, corr, alpha=0.5)" in err
    assert "DegenerateVarianceError" in err


# --- config files ----------------------------------------------------------------------------


def test_config_file_with_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# campaign\nfamily = stable\nalpha = 0.5\nhurst=0.5\nsigma2=1\nt=9\ns=1\n", encoding="utf-8")
    code, out, _ = call("eval", "corr", "--config", cfg, "--t", "4")
    assert code == 0
    assert out == "0.7071067811865476\n"


@pytest.mark.parametrize("text,fragment", [("alpha 0.5\n", "expected key=value"), ("colour=red\n", "unknown key"), ("kappa=x\n", "bad value")])
def test_config_file_errors(tmp_path, text, fragment):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text, encoding="utf-8")
    code, _, err = call("eval", "var", *STABLE, "--hurst", "0.3", "--sigma2", "1", "--t", "1", "--config", cfg)
    assert code == 2
    assert fragment in err


# --- tables --------------------------------------------------------------------------------


def test_table_rows_follow_grid_order():
    code, out, _ = call(
        "table", "cov", *STABLE, "--hurst", "0.4", "--sigma2", "1",
        "--t-start", "1", "--t-stop", "100", "--t-count", "3", "--spacing", "log", "--s", "0.5", "1",
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == ",".join(HEADER)
    rows = [line.split(",") for line in lines[1:]]
    assert [(r[5], r[6]) for r in rows] == [("1", "0.5"), ("1", "1"), ("10", "0.5"), ("10", "1"), ("100", "0.5"), ("100", "1")]
    assert all(r[:5] == ["cov", "stable", "alpha=0.5", "0.4", "1"] for r in rows)


def test_table_single_time_quantity_to_file(tmp_path):
    path = tmp_path / "var.csv"
    code, out, _ = call(
        "table", "var", *MIXTURE, "--hurst", "0.4", "--sigma2", "1",
        "--t-start", "1", "--t-stop", "3", "--t-count", "3", "--output", path,
    )
    assert code == 0
    assert out == ""
    data = path.read_bytes()
    assert b"\r" not in data
    lines = data.decode("utf-8").splitlines()
    assert len(lines) == 4
    assert lines[1].startswith("var,mixture,alpha1=0.3;alpha2=0.8;c1=0.4;c2=0.6,0.4,1,1,,")


def test_table_plan_validation():
    plan = TablePlan("cov", 1.0, 2.0, 2, s_values=(0.5,))
    assert plan.points() == [(1.0, 0.5), (2.0, 0.5)]
    for kwargs in ({"t_count": 1}, {"t_start": 3.0}, {"spacing": "cubic"}):
        base = {"quantity": "cov", "t_start": 1.0, "t_stop": 2.0, "t_count": 2, **kwargs}
        with pytest.raises(UsageError):
            TablePlan(**base)
    with pytest.raises(UsageError):
        TablePlan("cov", 0.0, 2.0, 3, spacing="log")
    with pytest.raises(UsageError):
        TablePlan("skew", 1.0, 2.0, 3)


# --- Monte Carlo validation ------------------------------------------------------------------


MC_ARGS = ["mc", "validate", "--quantity", "var", "--family", "drift", "--mu", "2", "--hurst", "0.3",
           "--sigma2", "1", "--t", "3", "--reps", "500", "--seed", "1"]


def test_mc_report_row():
    code, out, _ = call(*MC_ARGS)
    assert code == 0
    header, row = out.splitlines()
    assert header.split(",") == HEADER + MC_EXTRA
    fields = dict(zip(header.split(","), row.split(",")))
    assert float(fields["value"]) == pytest.approx(1.5**0.6, rel=1e-15)
    assert abs(float(fields["z"])) <= 3
    assert fields["reps"] == "500" and fields["seed"] == "1"


def test_mc_is_deterministic_across_workers():
    _, serial, _ = call(*MC_ARGS)
    _, parallel, _ = call(*MC_ARGS, "--workers", "2")
    assert serial == parallel


def test_mc_z_breach_exits_1():
    # a coarse grid biases Y(t) far beyond the sampling error
    code, out, _ = call(
        "mc", "validate", "--quantity", "var", *STABLE, "--hurst", "0.7", "--sigma2", "1",
        "--t", "0.2", "--reps", "20000", "--seed", "3", "--dt", "0.2",
    )
    assert code == 1
    assert abs(float(out.splitlines()[1].split(",")[10])) > 3


# --- asymptotics -------------------------------------------------------------------------------


def test_asymptotics_report_format():
    code, out, _ = call("asymptotics", "stable", "--alpha", "0.6", "--hurst", "0.3", "--sigma2", "1", "--t", "100", "--s", "1")
    assert code == 0
    fields = dict(line.split("=", 1) for line in out.splitlines())
    assert fields["regime"] == "t_inf"
    assert fields["leading_exponent"] == "-0.18"
    assert fields["exponents"] == "0.18;0.42"
    assert fields["degenerate"] == "false"


@pytest.mark.parametrize(
    "argv",
    [
        ["asymptotics", "mixture", "--alpha1", "0.3", "--alpha2", "0.8", "--c1", "0.4", "--c2", "0.6", "--regime", "t_0", "--t", "1e-6"],
        ["asymptotics", "tempered", "--alpha", "0.5", "--a", "1", "--t", "1000"],
        ["asymptotics", "stable", "--alpha", "0.6", "--t", "1", "--v", "1e4"],
    ],
)
def test_asymptotics_regimes_run(argv):
    code, out, err = call(*argv, "--hurst", "0.5" if "tempered" in argv else "0.7", "--sigma2", "1")
    assert code == 0, err
    assert math.isfinite(float(dict(line.split("=", 1) for line in out.splitlines())["leading_value"]))


# --- number formatting and entry points ----------------------------------------------------------


@given(x=st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    text = fmt(x)
    assert float(text) == x
    assert len(text.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17


def test_fmt_drops_integral_suffix():
    assert fmt(2.0) == "2"
    assert fmt(-0.0) == "-0"
    assert fmt(1e22) == "1e+22"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "tcfbm", "eval", "var", "--family", "drift", "--mu", "1", "--hurst", "0.7", "--sigma2", "2", "--t", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout == "2\n"
