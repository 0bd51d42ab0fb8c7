"""Command-line interface: ``lowrank-sure {sure,path,simulate,check-divergence}``.

Errors exit nonzero with one JSON line ``{"error": code, "detail": ...}`` on
stderr. JSON numbers carry 17 significant digits, CSV numbers 10.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from .errors import InvalidInput, LowRankSureError
from .estimators import family_estimator, parse_estimator
from .matrix import MatrixObs, check_distinct, read_matrix_csv, relative_gaps, svd_decompose
from .oracle import FdConfig, finite_difference_divergence
from .risk import divergence, sure_estimate, sure_path
from .simulation import SimConfig, default_lambda_grid, replicate_rng, run_simulation, sample_gaussian_matrix


class CliError(Exception):
    def __init__(self, code, detail, status=2):
        super().__init__(detail)
        self.code = code
        self.detail = detail
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


def _num(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    return s


def dumps(obj) -> str:
    """Single-line JSON with 17-significant-digit floats."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, int, float, np.floating, np.integer)):
        return _num(obj.item() if isinstance(obj, (np.floating, np.integer)) else obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _g10(x) -> str:
    return f"{x:.10g}"


def parse_grid(spec: str, family: str) -> list:
    """``"a..b"`` (inclusive integer range) or ``"start:stop:step"`` (stop inclusive)."""
    spec = spec.strip()
    try:
        if ".." in spec:
            lo, hi = (int(s) for s in spec.split(".."))
            if hi < lo:
                raise ValueError("empty range")
            vals = list(range(lo, hi + 1))
        elif ":" in spec:
            parts = [float(s) for s in spec.split(":")]
            if len(parts) != 3:
                raise ValueError("need start:stop:step")
            start, stop, step = parts
            if not step > 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = [start + i * step for i in range(n)]
        else:
            vals = [float(s) for s in spec.split(",")]
    except ValueError as exc:
        raise CliError("bad_grid", f"bad grid {spec!r}: {exc}") from None
    if family == "rr":
        if any(float(v) != int(v) for v in vals):
            raise CliError("bad_grid", f"reduced-rank grid must be integers, got {spec!r}")
        vals = [int(v) for v in vals]
    return vals


def _load_obs(args) -> MatrixObs:
    try:
        a = read_matrix_csv(args.input)
    except OSError as exc:
        raise CliError("io", str(exc)) from None
    if args.transpose:
        a = a.T
    if a.shape[0] < a.shape[1]:
        raise CliError("wide_matrix", f"matrix is {a.shape[0]}x{a.shape[1]} with p < q; pass --transpose")
    return MatrixObs(a, args.sigma2)


def cmd_sure(args, out):
    obs = _load_obs(args)
    report = sure_estimate(obs, parse_estimator(args.estimator), args.gap_tol)
    out.write(dumps(report.to_dict()) + "\n")


def cmd_path(args, out):
    obs = _load_obs(args)
    grid = parse_grid(args.grid, args.family)
    ests = [family_estimator(args.family, x) for x in grid]
    path = sure_path(obs, ests, args.gap_tol)
    buf = io.StringIO()
    buf.write("param,rss,df,sure,stein_valid,error\n")
    for x, e in zip(grid, path.entries):
        param = str(x) if args.family == "rr" else _g10(x)
        if e.ok:
            r = e.report
            buf.write(f"{param},{_g10(r.rss)},{_g10(r.divergence)},{_g10(r.sure)},{str(r.stein_valid).lower()},\n")
        else:
            buf.write(f"{param},,,,,{e.error.code}\n")
    best = "none" if path.best_any is None else (str(grid[path.best_any]) if args.family == "rr" else _g10(grid[path.best_any]))
    buf.write(f"# argmin_sure={best}\n")
    _emit(buf.getvalue(), args.out, out)


def cmd_simulate(args, out):
    if args.grid is None:
        grid = list(range(1, args.q)) if args.family == "rr" else default_lambda_grid()
    else:
        grid = parse_grid(args.grid, args.family)
    cfg = SimConfig(args.p, args.q, args.b, args.seed, args.family, grid, sigma2=args.sigma2)
    result = run_simulation(cfg)
    _emit(result.to_csv(), args.out, None if args.out else out)
    ratios = []
    for pt in result.points:
        if pt.se > 0:
            ratios.append(abs(pt.bias) / pt.se)
        else:
            ratios.append(0.0 if pt.bias == 0 else math.inf)
    k = int(np.argmax(ratios))
    param = result.points[k].param
    summary = f"max |bias|/se = {_g10(ratios[k])} at param={param if args.family == 'rr' else _g10(param)} over {len(ratios)} grid points"
    (sys.stderr if not args.out else out).write(summary + "\n")


def cmd_check_divergence(args, out):
    est = parse_estimator(args.estimator)
    if args.p < args.q or args.q < 1:
        raise CliError("bad_dims", f"need p >= q >= 1, got p={args.p}, q={args.q}")
    cfg = FdConfig(args.h)
    for attempt in range(1000):
        obs = sample_gaussian_matrix(args.p, args.q, rng=replicate_rng(args.seed, attempt))
        f = svd_decompose(obs)
        gaps = relative_gaps(f.d)
        if gaps.size == 0 or gaps.min() > 100 * args.h:
            break
    else:
        raise CliError("no_draw", "could not draw a matrix with well-separated singular values")
    analytic = divergence(f, est)
    numeric = finite_difference_divergence(est, obs, cfg)
    rel_err = abs(analytic - numeric) / max(abs(analytic), 1e-300)
    out.write(dumps({
        "estimator": est.spec, "p": args.p, "q": args.q, "seed": args.seed, "h": args.h,
        "analytic": analytic, "numeric": numeric, "rel_err": rel_err,
        "min_relative_gap": float(check_distinct(f).min_relative_gap), "draws": attempt + 1,
    }) + "\n")


def _emit(text, path, out):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if out is not None:
        out.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lowrank-sure", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def matrix_args(sp):
        sp.add_argument("--input", required=True, help="matrix CSV file")
        sp.add_argument("--sigma2", required=True, type=float, help="known noise variance")
        sp.add_argument("--transpose", action="store_true", help="transpose the input first")
        sp.add_argument("--gap-tol", type=float, default=1e-8, help="relative singular value gap tolerance")

    sp = sub.add_parser("sure", help="SURE report for one estimator", allow_abbrev=False)
    matrix_args(sp)
    sp.add_argument("--estimator", required=True, help="rr:<r>, hard:<lambda> or soft:<lambda>")
    sp.set_defaults(func=cmd_sure)

    sp = sub.add_parser("path", help="SURE over a tuning-parameter grid", allow_abbrev=False)
    matrix_args(sp)
    sp.add_argument("--family", required=True, choices=["rr", "hard", "soft"])
    sp.add_argument("--grid", required=True, help="a..b or start:stop:step")
    sp.add_argument("--out", help="write CSV here instead of stdout")
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("simulate", help="Monte Carlo bias study", allow_abbrev=False)
    sp.add_argument("--p", required=True, type=int)
    sp.add_argument("--q", required=True, type=int)
    sp.add_argument("--b", required=True, type=int, help="number of replicates")
    sp.add_argument("--seed", required=True, type=int)
    sp.add_argument("--family", required=True, choices=["rr", "hard", "soft"])
    sp.add_argument("--grid", help="a..b or start:stop:step (default: 1..q-1, or 40 thresholds in (0, 10])")
    sp.add_argument("--sigma2", type=float, default=1.0)
    sp.add_argument("--out", help="results CSV path (default: stdout)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("check-divergence", help="analytic vs finite-difference divergence", allow_abbrev=False)
    sp.add_argument("--p", required=True, type=int)
    sp.add_argument("--q", required=True, type=int)
    sp.add_argument("--seed", required=True, type=int)
    sp.add_argument("--estimator", required=True)
    sp.add_argument("--h", type=float, default=1e-5)
    sp.set_defaults(func=cmd_check_divergence)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        args.func(args, stdout)
    except CliError as exc:
        stderr.write(dumps({"error": exc.code, "detail": exc.detail}) + "\n")
        return exc.status
    except LowRankSureError as exc:
        stderr.write(dumps({"error": exc.code, "detail": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
