"""Command-line front end.

    tcfbm eval {cov|corr|var|moment|increment-moment|increment-cov|cov-y} ...
    tcfbm table <quantity> --t-start A --t-stop B --t-count N [--spacing log] [--s ...]
    tcfbm mc validate [--quantity Q] ... --reps N --seed S
    tcfbm asymptotics {stable|mixture|tempered} ...

Exit codes: 0 success, 1 numerical failure or Monte Carlo z-score above 3,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from . import montecarlo as mc
from .errors import SpecValidationError, TcfbmError
from .moments import cov_Y, increment_moment_Y, moment_U
from .subordinators import spec_params, validate_spec
from .tfbm import (
    TfbmModel,
    abs_increment_moment_Z,
    corr_Z,
    cov_Z,
    increment_cov_Z,
    mixture_asymptotics,
    stable_asymptotics,
    tempered_asymptotics,
    var_Z,
)

QUANTITIES = ("cov", "corr", "var", "moment", "increment-moment", "increment-cov", "cov-y")
FAMILIES = ("stable", "tempered", "mixture", "drift")
FAMILY_FLAGS = {
    "stable": ("alpha",),
    "tempered": ("alpha", "a"),
    "mixture": ("alpha1", "alpha2", "c1", "c2"),
    "drift": ("mu",),
}
HEADER = ["quantity", "family", "params", "H", "sigma2", "t", "s", "value"]
MC_EXTRA = ["mc_mean", "mc_se", "z", "reps", "seed"]
_FLOAT_FLAGS = (
    "alpha", "a", "alpha1", "alpha2", "c1", "c2", "mu", "hurst", "sigma2", "t", "s", "v",
    "kappa", "m", "t_start", "t_stop", "dt",
)
_INT_FLAGS = ("t_count", "reps", "seed", "workers")


class UsageError(Exception):
    """Invalid or missing command-line input."""


def fmt(x) -> str:
    """Shortest decimal that parses back to the same double; integral values
    lose their trailing ``.0``."""
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--family", choices=FAMILIES)
    for name in ("alpha", "a", "alpha1", "alpha2", "c1", "c2", "mu"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--hurst", type=float, help="Hurst index H in (0,1)")
    g.add_argument("--sigma2", type=float, help="variance scale Var B_H(1)")
    g.add_argument("--kappa", type=float, help="moment order for Y quantities")
    g.add_argument("--m", type=float, help="absolute moment order for Z increments")
    g.add_argument("--config", help="key=value file mirroring the flags; flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tcfbm", description="Second-order structure of time-changed fBm.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_eval = sub.add_parser("eval", help="evaluate one quantity")
    p_eval.add_argument("quantity", choices=QUANTITIES)
    _model_flags(p_eval)
    p_eval.add_argument("--t", type=float)
    p_eval.add_argument("--s", type=float)
    p_eval.add_argument("--v", type=float, help="lag for increment-cov")

    p_table = sub.add_parser("table", help="CSV over a t-grid and a list of s values")
    p_table.add_argument("quantity", choices=QUANTITIES)
    _model_flags(p_table)
    p_table.add_argument("--t-start", dest="t_start", type=float)
    p_table.add_argument("--t-stop", dest="t_stop", type=float)
    p_table.add_argument("--t-count", dest="t_count", type=int)
    p_table.add_argument("--spacing", choices=("linear", "log"))
    p_table.add_argument("--s", type=float, nargs="+", help="s values (the lag v for increment-cov)")
    p_table.add_argument("--output", help="write CSV here instead of standard output")

    p_mc = sub.add_parser("mc", help="Monte Carlo campaigns")
    mc_sub = p_mc.add_subparsers(dest="mc_command", required=True, parser_class=_Parser)
    p_val = mc_sub.add_parser("validate", help="compare an analytic value with simulation")
    p_val.add_argument("--quantity", choices=QUANTITIES)
    _model_flags(p_val)
    p_val.add_argument("--t", type=float)
    p_val.add_argument("--s", type=float)
    p_val.add_argument("--v", type=float)
    p_val.add_argument("--reps", type=int)
    p_val.add_argument("--seed", type=int)
    p_val.add_argument("--dt", type=float, help="grid step (default 1e-3 * horizon)")
    p_val.add_argument("--workers", type=int)
    p_val.add_argument("--output")

    p_asym = sub.add_parser("asymptotics", help="leading asymptotic terms")
    p_asym.add_argument("example", choices=("stable", "mixture", "tempered"))
    _model_flags(p_asym)
    p_asym.add_argument("--t", type=float)
    p_asym.add_argument("--s", type=float)
    p_asym.add_argument("--v", type=float)
    p_asym.add_argument("--regime", choices=("t_inf", "s_0", "v_inf", "t_0"))
    return parser


def _read_config(path: str) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from exc
    for number, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"--config {path}:{number}: expected key=value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _merge_config(args):
    if not getattr(args, "config", None):
        return
    for key, raw in _read_config(args.config).items():
        if not hasattr(args, key):
            raise UsageError(f"--config: unknown key {key!r}")
        if getattr(args, key) is not None:
            continue  # the flag wins
        try:
            if key in _FLOAT_FLAGS:
                value = [float(x) for x in raw.split()] if key == "s" and args.command == "table" else float(raw)
            elif key in _INT_FLAGS:
                value = int(raw)
            else:
                value = raw
        except ValueError as exc:
            raise UsageError(f"--config: bad value for {key}: {raw!r}") from exc
        setattr(args, key, value)


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _spec_from(args, family=None):
    family = family or args.family
    if family is None:
        raise UsageError("missing --family")
    if args.family is not None and args.family != family:
        raise UsageError(f"--family {args.family} conflicts with {family}")
    _need(args, *FAMILY_FLAGS[family])
    mapping = {"family": family, **{k: getattr(args, k) for k in FAMILY_FLAGS[family]}}
    try:
        return validate_spec(mapping)
    except SpecValidationError as exc:
        raise UsageError(f"--family {family}: " + "; ".join(exc.violations)) from exc


def _model_from(args, spec):
    _need(args, "hurst", "sigma2")
    try:
        return TfbmModel(args.hurst, args.sigma2, spec)
    except TcfbmError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Quantity dispatch
# ---------------------------------------------------------------------------


def _z_quantity(quantity, args):
    if quantity in ("cov", "corr", "var", "increment-cov"):
        return True
    return quantity == "increment-moment" and args.m is not None


def _check_orders(quantity, args):
    if quantity == "moment":
        _need(args, "kappa")
    if quantity == "increment-moment":
        if (args.kappa is None) == (args.m is None):
            raise UsageError("increment-moment needs exactly one of --kappa (Y) or --m (Z)")


def _evaluate(quantity, spec, model, args, t, s):
    if quantity == "cov":
        return cov_Z(model, t, s)
    if quantity == "corr":
        return corr_Z(model, t, s)
    if quantity == "var":
        return var_Z(model, t)
    if quantity == "moment":
        return moment_U(spec, args.kappa, t)
    if quantity == "increment-moment":
        if args.m is not None:
            return abs_increment_moment_Z(model, args.m, t, s)
        return increment_moment_Y(spec, args.kappa, t, s)
    if quantity == "increment-cov":
        return increment_cov_Z(model, t, s)
    return cov_Y(spec, t, s)


def _uses_s(quantity):
    return quantity not in ("var", "moment")


def _params_text(spec, args, quantity):
    items = [f"{k}={fmt(v)}" for k, v in spec_params(spec).items()]
    if quantity == "moment" or (quantity == "increment-moment" and args.kappa is not None):
        items.append(f"kappa={fmt(args.kappa)}")
    if quantity == "increment-moment" and args.m is not None:
        items.append(f"m={fmt(args.m)}")
    return ";".join(items)


def _row(quantity, spec, model, args, t, s, value):
    return [
        quantity,
        spec.family,
        _params_text(spec, args, quantity),
        fmt(model.hurst) if model else "",
        fmt(model.sigma2) if model else "",
        fmt(t),
        fmt(s) if s is not None else "",
        fmt(value),
    ]


def _setup(args, quantity):
    _check_orders(quantity, args)
    spec = _spec_from(args)
    model = _model_from(args, spec) if _z_quantity(quantity, args) else None
    if model is None and args.hurst is not None and args.sigma2 is not None:
        model = _model_from(args, spec)
    return spec, model


def _second_time(quantity, args):
    if quantity == "increment-cov":
        _need(args, "v")
        return args.v
    if _uses_s(quantity):
        _need(args, "s")
        return args.s
    return None


def _cmd_eval(args, out):
    quantity = args.quantity
    spec, model = _setup(args, quantity)
    _need(args, "t")
    second = _second_time(quantity, args)
    value = _run_numeric(lambda: _evaluate(quantity, spec, model, args, args.t, second), spec, quantity, args)
    out.write(fmt(value) + "\n")
    return 0


@dataclass(frozen=True)
class TablePlan:
    """Grid behind one ``table`` run.

    ``s_values`` holds the second time argument for each row (the lag ``v``
    for increment-cov) and is ``(None,)`` for single-time quantities.
    """

    quantity: str
    t_start: float
    t_stop: float
    t_count: int
    spacing: str = "linear"
    s_values: tuple = (None,)
    output: str | None = None

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise UsageError(f"unknown quantity {self.quantity!r}")
        if not self.t_start < self.t_stop:
            raise UsageError("--t-start must be < --t-stop")
        if self.t_count < 2:
            raise UsageError("--t-count must be >= 2")
        if self.spacing not in ("linear", "log"):
            raise UsageError("--spacing must be linear or log")
        if self.spacing == "log" and self.t_start <= 0:
            raise UsageError("log spacing needs --t-start > 0")

    def t_grid(self) -> np.ndarray:
        if self.spacing == "log":
            grid = np.logspace(np.log10(self.t_start), np.log10(self.t_stop), self.t_count)
            grid[0], grid[-1] = self.t_start, self.t_stop
        else:
            grid = np.linspace(self.t_start, self.t_stop, self.t_count)
        if not np.all(np.diff(grid) > 0):
            raise UsageError("t grid is not strictly increasing")
        return grid

    def points(self):
        """(t, s) pairs in emission order: t outer, s inner."""
        return [(float(t), s) for t in self.t_grid() for s in self.s_values]


def _cmd_table(args, out):
    quantity = args.quantity
    spec, model = _setup(args, quantity)
    _need(args, "t_start", "t_stop", "t_count")
    if _uses_s(quantity):
        _need(args, "s")
        s_values = tuple(args.s) if isinstance(args.s, list) else (args.s,)
    else:
        s_values = (None,)
    plan = TablePlan(quantity, args.t_start, args.t_stop, args.t_count, args.spacing or "linear", s_values, args.output)
    rows = []
    for t, s in plan.points():
        value = _run_numeric(lambda: _evaluate(quantity, spec, model, args, t, s), spec, quantity, args)
        rows.append(_row(quantity, spec, model, args, t, s, value))
    _emit_csv(HEADER, rows, plan.output, out)
    return 0


_MC_QUANTITY = {
    "cov": "cov_Z",
    "corr": "corr_Z",
    "var": "var_Z",
    "increment-cov": "increment_cov_Z",
    "cov-y": "cov_Y",
}


def _cmd_mc(args, out):
    quantity = args.quantity or "cov"
    if quantity == "moment":
        raise UsageError("mc validate does not support the moment quantity; use increment-moment with s=0")
    spec, model = _setup(args, quantity)
    _need(args, "t", "reps", "seed")
    second = _second_time(quantity, args)
    if quantity == "increment-moment":
        mc_name = "abs_increment_moment_Z" if args.m is not None else "increment_moment_Y"
    else:
        mc_name = _MC_QUANTITY[quantity]
    if args.reps < 100:
        raise UsageError("--reps must be >= 100")
    params = {"t": args.t}
    if quantity == "increment-cov":
        params["v"] = second
        horizon = args.t + second
    else:
        if second is not None:
            params["s"] = second
        horizon = max(args.t, second if second is not None else 0.0)
    if quantity == "var":
        params.pop("s", None)
    params.update({"kappa": args.kappa, "m": args.m})
    analytic = _run_numeric(lambda: _evaluate(quantity, spec, model, args, args.t, second), spec, quantity, args)
    path_cfg = mc.PathConfig(horizon=horizon, dt=args.dt)
    target = model if model is not None else spec
    est = _run_numeric(
        lambda: mc.estimate(target, mc_name, params, args.reps, args.seed, path_cfg, args.workers),
        spec, quantity, args,
    )
    z = est.z_score(analytic)
    row = _row(quantity, spec, model, args, args.t, second, analytic)
    row += [fmt(est.mean), fmt(est.std_error), fmt(z), str(est.n_replicates), str(args.seed)]
    _emit_csv(HEADER + MC_EXTRA, [row], args.output, out)
    return 0 if abs(z) <= 3 else 1


def _cmd_asymptotics(args, out):
    example = args.example
    family = {"stable": "stable", "mixture": "mixture", "tempered": "tempered"}[example]
    spec = _spec_from(args, family)
    _need(args, "hurst", "sigma2", "t")
    if example == "stable":
        report = _run_numeric(
            lambda: stable_asymptotics(spec.alpha, args.hurst, args.sigma2, args.t,
                                       args.s if args.s is not None else 1.0, args.v, args.regime),
            spec, "asymptotics", args,
        )
    elif example == "mixture":
        report = _run_numeric(
            lambda: mixture_asymptotics(spec, args.hurst, args.sigma2, args.t, args.s, args.regime or "t_inf"),
            spec, "asymptotics", args,
        )
    else:
        report = _run_numeric(
            lambda: tempered_asymptotics(spec, args.hurst, args.sigma2, args.t, args.s, args.regime or "t_inf"),
            spec, "asymptotics", args,
        )
    out.write(f"regime={report.regime}\n")
    out.write(f"quantity={report.quantity}\n")
    out.write(f"leading_value={fmt(report.leading_value)}\n")
    out.write(f"leading_exponent={fmt(report.leading_exponent)}\n")
    out.write("exponents=" + ";".join(fmt(e) for e in report.exponents) + "\n")
    out.write(f"degenerate={'true' if report.degenerate else 'false'}\n")
    out.write(f"description={report.description}\n")
    return 0


class _NumericFailure(Exception):
    pass


def _run_numeric(fn, spec, quantity, args):
    try:
        return fn()
    except TcfbmError as exc:
        if isinstance(exc, SpecValidationError):
            raise UsageError(str(exc)) from exc
        params = ";".join(f"{k}={fmt(v)}" for k, v in spec_params(spec).items())
        raise _NumericFailure(f"({spec.family}, {quantity}, {params}): {type(exc).__name__}: {exc}") from exc


def _emit_csv(header, rows, path, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    """Run the command line ``argv`` and return the exit code."""
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        _merge_config(args)
        if args.command == "eval":
            return _cmd_eval(args, out)
        if args.command == "table":
            return _cmd_table(args, out)
        if args.command == "mc":
            return _cmd_mc(args, out)
        return _cmd_asymptotics(args, out)
    except UsageError as exc:
        err.write(f"tcfbm: usage error: {exc}\n")
        return 2
    except _NumericFailure as exc:
        err.write(f"tcfbm: numerical failure {exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run())
