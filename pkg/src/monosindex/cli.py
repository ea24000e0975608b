# Command line front end.
#
# Subcommands:
#   fit          estimate the index from a CSV dataset
#   simulate     replication study on the cubic-normal model
#   asymptotics  Monte Carlo limiting covariance targets
#
# Exit codes: 0 success, 1 usage error, 2 input data error, 3 numerical
# failure. All numeric output is printed with 12 significant digits so that
# JSON and CSV renderings of the same report carry identical content.

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .asymptotics import asymptotic_cov_ese, asymptotic_cov_linear, asymptotic_cov_sse
from .estimators import (
    ESTIMATOR_NAMES,
    EstimateResult,
    LinearLink,
    SingularDesignError,
    estimate_linear,
    estimate_lse,
    warm_start_pipeline,
    PipelineConfig,
)
from .figures import save_link_fit_figure, save_scaled_error_boxplot
from .isotonic import StepFunction
from .kernel import BandwidthRule
from .model import Sample, cubic_normal_spec, derive_seed
from .search import SearchOptions
from .simulate import SimConfig, boxplot_stats, run_replications, summarize
from .spline import SplineFit

__all__ = ["main"]

WORKERS_ENV = "MONOSINDEX_WORKERS"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class DataFileError(Exception):
    """Unreadable or malformed dataset file."""


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _fnum(x: float) -> float:
    # Round-trip through the 12-significant-digit rendering so JSON and
    # CSV carry bit-identical values.
    return float(_fmt(x))


def load_dataset(path: str) -> Sample:
    """Read a dataset with header X1..Xd,Y and finite decimal rows."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFileError(f"cannot read {path}: {exc.strerror or exc}") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise DataFileError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 3:
        raise DataFileError(f"{path}: need at least two covariate columns and a response column")
    try:
        float(header[0])
        raise DataFileError(f"{path}: first row must be a header, not data")
    except ValueError:
        pass
    d = len(header) - 1
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != d + 1:
            raise DataFileError(f"{path}: row {k} has {len(parts)} fields, expected {d + 1}")
        try:
            vals = [float(v) for v in parts]
        except ValueError:
            raise DataFileError(f"{path}: row {k} contains a non-numeric field") from None
        if not all(np.isfinite(v) for v in vals):
            raise DataFileError(f"{path}: row {k} contains a non-finite value")
        rows.append(vals)
    if len(rows) < d + 1:
        raise DataFileError(f"{path}: need at least d + 1 = {d + 1} data rows, got {len(rows)}")
    data = np.asarray(rows, dtype=float)
    return Sample(xs=data[:, :d], ys=data[:, d])


def _link_summary(result: EstimateResult) -> dict:
    link = result.link
    if isinstance(link, StepFunction):
        return {"kind": "step", "jumps": int(link.taus.size)}
    if isinstance(link, SplineFit):
        return {"kind": "spline", "knots": int(link.m), "penalty": _fnum(link.penalty)}
    if isinstance(link, LinearLink):
        return {"kind": "linear", "intercept": _fnum(link.intercept), "slope": _fnum(link.slope)}
    return {"kind": type(link).__name__}


def _fit_report_json(estimator: str, sample: Sample, result: EstimateResult) -> str:
    payload = {
        "estimator": estimator,
        "n": sample.n,
        "d": sample.d,
        "alpha_hat": [_fnum(a) for a in result.alpha_hat],
        "criterion": _fnum(result.criterion),
        "evals": int(result.evals),
        "link": _link_summary(result),
    }
    return json.dumps(payload, indent=2)


def _fit_report_csv(estimator: str, sample: Sample, result: EstimateResult) -> str:
    link = _link_summary(result)
    link_size = link.get("jumps", link.get("knots", 0))
    cols = ["estimator", "n", "d"]
    cols += [f"alpha_{i + 1}" for i in range(sample.d)]
    cols += ["criterion", "evals", "link_kind", "link_size"]
    vals = [estimator, str(sample.n), str(sample.d)]
    vals += [_fmt(a) for a in result.alpha_hat]
    vals += [_fmt(result.criterion), str(int(result.evals)), link["kind"], str(link_size)]
    return ",".join(cols) + "\n" + ",".join(vals) + "\n"


def cmd_fit(args) -> int:
    sample = load_dataset(args.data)
    opts = SearchOptions(seed=args.seed)
    if args.estimator == "linear":
        result, _ = estimate_linear(sample)
    elif args.estimator == "lse":
        result = estimate_lse(sample, n_starts=args.starts, seed=derive_seed(args.seed, 1), opts=opts)
    else:
        config = PipelineConfig(
            estimators=("lse", args.estimator),
            n_starts=args.starts,
            seed=args.seed,
            mu=args.mu,
            bandwidth=BandwidthRule(constant=args.bw_const),
            search=opts,
        )
        result = warm_start_pipeline(sample, config)[args.estimator]
    if args.format == "json":
        print(_fit_report_json(args.estimator, sample, result))
    else:
        sys.stdout.write(_fit_report_csv(args.estimator, sample, result))
    if args.figure:
        save_link_fit_figure(sample, result, args.figure, estimator=args.estimator)
    return EXIT_OK


def _summary_rows(summary) -> list[dict]:
    rows = []
    for name, est in summary.estimators.items():
        d = est.means.size
        row = {"estimator": name, "reps": est.reps_used, "failures": est.failures}
        for i in range(d):
            row[f"mean_{i + 1}"] = _fnum(est.means[i])
        for i in range(d):
            for j in range(i, d):
                row[f"scov_{i + 1}{j + 1}"] = _fnum(est.scaled_cov[i, j])
        bp = boxplot_stats(est.scaled_errors)
        row["err_min"] = _fnum(bp.minimum)
        row["err_q1"] = _fnum(bp.q1)
        row["err_median"] = _fnum(bp.median)
        row["err_q3"] = _fnum(bp.q3)
        row["err_max"] = _fnum(bp.maximum)
        row["err_outliers"] = [_fnum(v) for v in bp.outliers]
        rows.append(row)
    return rows


def _summary_csv(rows: list[dict]) -> str:
    if not rows:
        return "\n"
    cols = [k for k in rows[0] if k != "err_outliers"] + ["err_outliers"]
    out = [",".join(cols)]
    for row in rows:
        vals = []
        for c in cols:
            v = row[c]
            if c == "err_outliers":
                vals.append(";".join(_fmt(x) for x in v))
            elif isinstance(v, float):
                vals.append(_fmt(v))
            else:
                vals.append(str(v))
        out.append(",".join(vals))
    return "\n".join(out) + "\n"


def _replications_csv(rows, d: int) -> str:
    cols = ["rep", "estimator"] + [f"alpha_{i + 1}" for i in range(d)] + ["criterion", "error"]
    lines = [",".join(cols)]
    for r in rows:
        vals = [str(r.rep), r.estimator]
        vals += [_fmt(a) for a in r.alpha]
        vals.append(_fmt(r.criterion))
        vals.append("" if r.error is None else r.error.replace(",", ";"))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    spec = cubic_normal_spec(args.d)
    estimators = tuple(args.estimators.split(",")) if args.estimators else ESTIMATOR_NAMES
    config = SimConfig(
        spec=spec,
        n=args.n,
        reps=args.reps,
        estimators=estimators,
        seed=args.seed,
        n_starts=args.starts,
        mu=args.mu,
        bandwidth_constant=args.bw_const,
        workers=args.workers,
    )
    rows = run_replications(config)
    summary = summarize(rows, spec.alpha0, config.n)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rep_path = out / "replications.csv"
    rep_path.write_text(_replications_csv(rows, spec.d), encoding="utf-8")
    srows = _summary_rows(summary)
    csv_path = out / "summary.csv"
    csv_path.write_text(_summary_csv(srows), encoding="utf-8")
    json_path = out / "summary.json"
    payload = {
        "model": args.model,
        "n": config.n,
        "d": spec.d,
        "reps": config.reps,
        "seed": config.seed,
        "estimators": srows,
    }
    json_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    fig_path = out / "boxplot_scaled_errors.png"
    save_scaled_error_boxplot(summary, fig_path)
    for p in (rep_path, csv_path, json_path, fig_path):
        print(p)
    return EXIT_OK


def cmd_asymptotics(args) -> int:
    spec = cubic_normal_spec(args.d)
    if args.estimator == "sse":
        target = asymptotic_cov_sse(spec, mc_samples=args.mc, seed=args.seed)
    elif args.estimator == "ese":
        target = asymptotic_cov_ese(spec, mc_samples=args.mc, seed=args.seed)
    else:
        target = asymptotic_cov_linear(spec, mc_samples=args.mc, seed=args.seed, variant=args.variant)
    cov = target.covariance
    d = cov.shape[0]
    if args.format == "json":
        payload = {
            "model": args.model,
            "estimator": args.estimator,
            "mc_samples": args.mc,
            "seed": args.seed,
            "covariance": [[_fnum(cov[i, j]) for j in range(d)] for i in range(d)],
        }
        if args.estimator == "linear":
            payload["variant"] = args.variant
            payload["constant"] = _fnum(target.constant)
        print(json.dumps(payload, indent=2))
    else:
        lines = ["i,j,value"]
        for i in range(d):
            for j in range(d):
                lines.append(f"{i + 1},{j + 1},{_fmt(cov[i, j])}")
        if args.estimator == "linear":
            lines.append(f"c,,{_fmt(target.constant)}")
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _default_workers() -> int:
    env = os.environ.get(WORKERS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> _Parser:
    parser = _Parser(prog="monosindex", description="Monotone single index model estimation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="estimate the index from a CSV dataset")
    fit.add_argument("--data", required=True, help="CSV file with header X1..Xd,Y")
    fit.add_argument("--estimator", required=True, choices=ESTIMATOR_NAMES)
    fit.add_argument("--mu", type=float, default=0.1, help="spline penalty (plse)")
    fit.add_argument("--bw-const", type=float, default=0.5, help="bandwidth constant (ese)")
    fit.add_argument("--starts", type=int, default=20, help="random starts for the warm-start LSE")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--format", choices=("json", "csv"), default="json")
    fit.add_argument("--figure", default=None, help="optional path for a data + fitted link figure")
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="replication study on the simulation model")
    sim.add_argument("--model", choices=("cubic-normal",), default="cubic-normal")
    sim.add_argument("--n", type=int, required=True, help="sample size per replication")
    sim.add_argument("--d", type=int, default=3, help="covariate dimension")
    sim.add_argument("--reps", type=int, required=True)
    sim.add_argument("--estimators", default="", help="comma-separated subset (default: all)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--starts", type=int, default=20)
    sim.add_argument("--mu", type=float, default=0.1)
    sim.add_argument("--bw-const", type=float, default=0.5)
    sim.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=cmd_simulate)

    asy = sub.add_parser("asymptotics", help="Monte Carlo limiting covariance targets")
    asy.add_argument("--model", choices=("cubic-normal",), default="cubic-normal")
    asy.add_argument("--d", type=int, default=3)
    asy.add_argument("--estimator", required=True, choices=("sse", "ese", "linear"))
    asy.add_argument("--variant", choices=("paper_formula", "sandwich"), default="sandwich")
    asy.add_argument("--mc", type=int, default=1_000_000)
    asy.add_argument("--seed", type=int, default=0)
    asy.add_argument("--format", choices=("json", "csv"), default="json")
    asy.set_defaults(func=cmd_asymptotics)
    return parser


def _validate(args) -> None:
    def usage(msg: str):
        raise _UsageError(msg)

    if getattr(args, "seed", 0) < 0:
        usage("--seed must be nonnegative")
    if getattr(args, "mu", 1.0) <= 0:
        usage("--mu must be positive")
    if getattr(args, "bw_const", 1.0) <= 0:
        usage("--bw-const must be positive")
    if getattr(args, "starts", 1) < 1:
        usage("--starts must be at least 1")
    if args.command == "simulate":
        if args.n < 2:
            usage("--n must be at least 2")
        if args.reps < 1:
            usage("--reps must be at least 1")
        if args.d < 2:
            usage("--d must be at least 2")
        if args.workers is None:
            args.workers = _default_workers()
        if args.workers < 1:
            usage("--workers must be at least 1")
        if args.estimators:
            unknown = set(args.estimators.split(",")) - set(ESTIMATOR_NAMES)
            if unknown:
                usage(f"unknown estimators: {','.join(sorted(unknown))}")
    if args.command == "asymptotics":
        if args.mc < 2:
            usage("--mc must be at least 2")
        if args.d < 2:
            usage("--d must be at least 2")


class _UsageError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _validate(args)
    except _UsageError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except DataFileError as exc:
        print(f"{parser.prog}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SingularDesignError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"{parser.prog}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
