# The six index estimators and the warm-start protocol.
#
# LSE: multi-start simplex minimization of the profiled least squares
#      criterion (the inner monotone fit is recomputed at every direction).
# SSE / ESE / PLSE: norm minimization of the corresponding projected score,
#      started at the LSE solution.
# linear: ordinary least squares on centered covariates, normalized;
#      direction-consistent when the covariates are elliptically symmetric.
# MRE: maximum rank correlation (concordance fraction), maximized by the
#      simplex search on the negated objective.
#
# Searches run unconstrained in R^d; objectives normalize internally or are
# invariant under positive rescaling, and every returned estimate is
# normalized to unit length. No post-hoc sign alignment is ever applied:
# the criteria themselves pin the sign through the nondecreasing link fit.

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .isotonic import StepFunction, fit_monotone_ls, monotone_fit_sorted
from .kernel import BandwidthRule
from .model import Sample, derive_seed, project_sample
from .score import score_norm_objective
from .search import SearchOptions, SearchResult, nelder_mead, hooke_jeeves, random_unit_starts
from .spline import SplineFit, fit_smoothing_spline, merge_knots

__all__ = [
    "ESTIMATOR_NAMES",
    "EstimateResult",
    "LinearLink",
    "LinearSolveDiagnostics",
    "SingularDesignError",
    "PipelineConfig",
    "estimate_lse",
    "estimate_sse",
    "estimate_ese",
    "estimate_plse",
    "estimate_linear",
    "estimate_mre",
    "warm_start_pipeline",
    "rank_concordance",
]

ESTIMATOR_NAMES = ("lse", "sse", "ese", "plse", "linear", "mre")

_MIN_NORM = 1e-8
_MAX_CONDITION = 1e12


class SingularDesignError(RuntimeError):
    """Raised when the centered covariate matrix is numerically singular."""


@dataclass(frozen=True)
class LinearLink:
    """Fitted straight-line link y = intercept + slope * u."""

    intercept: float
    slope: float


@dataclass(frozen=True)
class EstimateResult:
    """Outcome of one index estimation.

    `link` is the link estimate at `alpha_hat`: a StepFunction for
    lse/sse/ese/mre, a SplineFit for plse, a LinearLink for linear.
    `criterion` is the final objective value (mean squared residual for
    lse/linear, score norm for sse/ese/plse, concordance fraction for mre).
    `seconds` is wall time, filled in by the pipeline.
    """

    alpha_hat: np.ndarray
    link: Union[StepFunction, SplineFit, LinearLink]
    criterion: float
    evals: int
    start_used: Optional[np.ndarray]
    seconds: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.alpha_hat, dtype=float)
        if abs(np.linalg.norm(a) - 1.0) > 1e-10:
            raise ValueError("alpha_hat must have unit norm")
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        object.__setattr__(self, "alpha_hat", a)
        if self.start_used is not None:
            s = np.ascontiguousarray(np.asarray(self.start_used, dtype=float))
            s.setflags(write=False)
            object.__setattr__(self, "start_used", s)


@dataclass(frozen=True)
class LinearSolveDiagnostics:
    """Raw (pre-normalization) linear solution and conditioning."""

    raw_alpha: np.ndarray
    condition_estimate: float

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.raw_alpha, dtype=float))
        a.setflags(write=False)
        object.__setattr__(self, "raw_alpha", a)


def _normalize(alpha: np.ndarray) -> np.ndarray:
    nrm = float(np.linalg.norm(alpha))
    if nrm < _MIN_NORM:
        raise ValueError("search returned a degenerate direction")
    return alpha / nrm


def lse_criterion(sample: Sample):
    """Mean squared residual of the monotone fit, as a function of alpha.

    Invariant under positive rescaling of alpha; +inf below norm 1e-8
    (the ordering is undefined at zero)."""

    def objective(alpha) -> float:
        a = np.asarray(alpha, dtype=float)
        if not np.isfinite(a).all() or np.linalg.norm(a) < _MIN_NORM:
            return np.inf
        ts, fitted, order = monotone_fit_sorted(sample, a)
        resid = sample.ys[order] - fitted
        return float(resid @ resid) / sample.n

    return objective


def estimate_lse(sample: Sample, n_starts: int = 20, seed: int = 0, opts: SearchOptions = SearchOptions()) -> EstimateResult:
    """Profile least squares estimate from `n_starts` random unit starts.

    Each start is minimized by the simplex search without a norm
    constraint; the best final criterion wins and its argmin is normalized.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    objective = lse_criterion(sample)
    starts = random_unit_starts(sample.d, n_starts, seed)
    best: SearchResult | None = None
    best_start = None
    total_evals = 0
    for start in starts:
        res = nelder_mead(objective, start, opts)
        total_evals += res.evals
        if best is None or res.value < best.value:
            best, best_start = res, start
    alpha_hat = _normalize(best.argmin)
    return EstimateResult(
        alpha_hat=alpha_hat,
        link=fit_monotone_ls(sample, alpha_hat),
        criterion=best.value,
        evals=total_evals,
        start_used=best_start,
    )


def _score_estimate(sample: Sample, start, kind: str, opts: SearchOptions, **params) -> tuple[np.ndarray, SearchResult]:
    start = np.asarray(start, dtype=float)
    objective = score_norm_objective(kind, sample, **params)
    res = nelder_mead(objective, start, opts)
    return _normalize(res.argmin), res


def estimate_sse(sample: Sample, start, opts: SearchOptions = SearchOptions()) -> EstimateResult:
    """Simple score estimate: minimize the projected-score norm from `start`."""
    alpha_hat, res = _score_estimate(sample, start, "sse", opts)
    return EstimateResult(
        alpha_hat=alpha_hat,
        link=fit_monotone_ls(sample, alpha_hat),
        criterion=res.value,
        evals=res.evals,
        start_used=np.asarray(start, dtype=float),
    )


def estimate_ese(
    sample: Sample,
    start,
    bandwidth: BandwidthRule = BandwidthRule(),
    opts: SearchOptions = SearchOptions(),
) -> EstimateResult:
    """Efficient score estimate; the bandwidth follows `bandwidth` applied
    to the projected-data range of each candidate direction."""
    alpha_hat, res = _score_estimate(sample, start, "ese", opts, bandwidth=bandwidth)
    return EstimateResult(
        alpha_hat=alpha_hat,
        link=fit_monotone_ls(sample, alpha_hat),
        criterion=res.value,
        evals=res.evals,
        start_used=np.asarray(start, dtype=float),
    )


def estimate_plse(sample: Sample, start, mu: float = 0.1, opts: SearchOptions = SearchOptions()) -> EstimateResult:
    """Penalized least squares estimate: minimize the spline-score norm by
    pattern search from `start`."""
    if not (mu > 0 and np.isfinite(mu)):
        raise ValueError("mu must be a positive real")
    start = np.asarray(start, dtype=float)
    objective = score_norm_objective("plse", sample, mu=mu)
    res = hooke_jeeves(objective, start, opts)
    alpha_hat = _normalize(res.argmin)
    proj = project_sample(sample, alpha_hat)
    knots, y_m, w_m, _ = merge_knots(proj.ts, proj.ys_ordered)
    return EstimateResult(
        alpha_hat=alpha_hat,
        link=fit_smoothing_spline(knots, y_m, w_m, mu),
        criterion=res.value,
        evals=res.evals,
        start_used=start,
    )


def estimate_linear(sample: Sample) -> tuple[EstimateResult, LinearSolveDiagnostics]:
    """Normalized ordinary least squares on centered covariates.

    Solves S alpha = (1/n) sum (x_i - xbar) y_i with S the (biased) sample
    covariance of the covariates. Raises SingularDesignError when the
    condition number of S exceeds 1e12.
    """
    x_bar = sample.xs.mean(axis=0)
    xc = sample.xs - x_bar
    s_n = xc.T @ xc / sample.n
    cond = float(np.linalg.cond(s_n))
    if not np.isfinite(cond) or cond > _MAX_CONDITION:
        raise SingularDesignError(
            f"centered covariate covariance is numerically singular (condition estimate {cond:.3e}); "
            "check for duplicated or collinear covariate columns"
        )
    rhs = xc.T @ sample.ys / sample.n
    raw = np.linalg.solve(s_n, rhs)
    alpha_hat = _normalize(raw)
    slope = float(np.linalg.norm(raw))
    y_bar = float(sample.ys.mean())
    intercept = y_bar - slope * float(alpha_hat @ x_bar)
    fitted = y_bar + xc @ raw
    resid = sample.ys - fitted
    result = EstimateResult(
        alpha_hat=alpha_hat,
        link=LinearLink(intercept=intercept, slope=slope),
        criterion=float(resid @ resid) / sample.n,
        evals=0,
        start_used=None,
    )
    return result, LinearSolveDiagnostics(raw_alpha=raw, condition_estimate=cond)


def _count_inversions(a: np.ndarray) -> int:
    """Number of pairs i < j with a_i > a_j (strict), by bottom-up merges."""
    a = np.asarray(a, dtype=float).copy()
    n = a.size
    if n < 2:
        return 0
    inv = 0
    # vectorized first pass over adjacent pairs
    m = n - (n % 2)
    x0, x1 = a[0:m:2].copy(), a[1:m:2].copy()
    inv += int(np.sum(x0 > x1))
    a[0:m:2] = np.minimum(x0, x1)
    a[1:m:2] = np.maximum(x0, x1)
    width = 2
    while width < n:
        for lo in range(0, n - width, 2 * width):
            mid = lo + width
            hi = min(lo + 2 * width, n)
            left = a[lo:mid]
            right = a[mid:hi]
            # pairs with left element strictly greater than a right element
            inv += left.size * right.size - int(np.searchsorted(left, right, side="right").sum())
            a[lo:hi] = np.sort(a[lo:hi], kind="stable")
        width *= 2
    return inv


def _tie_pairs(a: np.ndarray) -> int:
    _, counts = np.unique(a, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def _strictly_increasing_pairs(a: np.ndarray) -> int:
    n = a.size
    total = n * (n - 1) // 2
    return total - _count_inversions(a) - _tie_pairs(a)


def rank_concordance(ts: np.ndarray, ys: np.ndarray) -> float:
    """Fraction of strictly concordant pairs between two sequences.

    Counts pairs with ts and ys strictly ordered the same way, scaled by
    2 / (n (n - 1)); ties in either sequence count as discordant. Order
    statistics are computed by inversion counting (O(n log n) merges).
    """
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = ts.size
    if ys.shape != ts.shape or n < 2:
        raise ValueError("need two equal-length sequences with n >= 2")
    order = np.argsort(ts, kind="stable")
    t_sorted = ts[order]
    y_sorted = ys[order]
    concordant = _strictly_increasing_pairs(y_sorted)
    # pairs inside a ts-tie group are not strictly ordered in ts
    if np.any(np.diff(t_sorted) == 0.0):
        boundaries = np.flatnonzero(np.diff(t_sorted) != 0.0) + 1
        for lo, hi in zip(np.concatenate(([0], boundaries)), np.concatenate((boundaries, [n]))):
            if hi - lo > 1:
                concordant -= _strictly_increasing_pairs(y_sorted[lo:hi])
    return 2.0 * concordant / (n * (n - 1))


def mre_objective(sample: Sample):
    """Concordance fraction between y and the projected index, as a
    function of alpha (rescaling-invariant)."""

    def objective(alpha) -> float:
        a = np.asarray(alpha, dtype=float)
        if not np.isfinite(a).all() or np.linalg.norm(a) < _MIN_NORM:
            return -np.inf
        return rank_concordance(sample.xs @ a, sample.ys)

    return objective


def estimate_mre(sample: Sample, start, opts: SearchOptions = SearchOptions()) -> EstimateResult:
    """Maximum rank correlation estimate from `start`.

    The simplex search minimizes the negated concordance fraction; the
    reported criterion is the (maximized) concordance fraction itself.
    """
    start = np.asarray(start, dtype=float)
    concordance = mre_objective(sample)
    res = nelder_mead(lambda a: -concordance(a), start, opts)
    alpha_hat = _normalize(res.argmin)
    return EstimateResult(
        alpha_hat=alpha_hat,
        link=fit_monotone_ls(sample, alpha_hat),
        criterion=float(-res.value),
        evals=res.evals,
        start_used=start,
    )


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for the warm-start estimation pipeline."""

    estimators: tuple[str, ...] = ESTIMATOR_NAMES
    n_starts: int = 20
    seed: int = 0
    mu: float = 0.1
    bandwidth: BandwidthRule = BandwidthRule()
    search: SearchOptions = SearchOptions()

    def __post_init__(self):
        unknown = set(self.estimators) - set(ESTIMATOR_NAMES)
        if unknown:
            raise ValueError(f"unknown estimators: {sorted(unknown)}")
        if not self.estimators:
            raise ValueError("at least one estimator must be selected")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if not (self.mu > 0 and np.isfinite(self.mu)):
            raise ValueError("mu must be a positive real")
        object.__setattr__(self, "estimators", tuple(self.estimators))


# stream id for the LSE random starts within a pipeline seed
_STARTS_STREAM = 1


def warm_start_pipeline(sample: Sample, config: PipelineConfig = PipelineConfig()) -> dict[str, EstimateResult]:
    """Run the selected estimators with the LSE solution as warm start.

    The LSE is computed first (from `n_starts` random unit starts) whenever
    any of sse/ese/plse/mre is selected, and its estimate seeds those
    searches. The linear estimator needs no start. Results are returned in
    the canonical estimator order, only for the selected names.
    """
    selected = config.estimators
    results: dict[str, EstimateResult] = {}
    needs_start = any(name in selected for name in ("sse", "ese", "plse", "mre"))
    lse_result: EstimateResult | None = None
    if needs_start or "lse" in selected:
        t0 = time.perf_counter()
        lse_result = estimate_lse(
            sample,
            n_starts=config.n_starts,
            seed=derive_seed(config.seed, _STARTS_STREAM),
            opts=config.search,
        )
        lse_result = replace(lse_result, seconds=time.perf_counter() - t0)
    for name in ESTIMATOR_NAMES:
        if name not in selected:
            continue
        if name == "lse":
            results[name] = lse_result
            continue
        t0 = time.perf_counter()
        if name == "sse":
            res = estimate_sse(sample, lse_result.alpha_hat, config.search)
        elif name == "ese":
            res = estimate_ese(sample, lse_result.alpha_hat, config.bandwidth, config.search)
        elif name == "plse":
            res = estimate_plse(sample, lse_result.alpha_hat, config.mu, config.search)
        elif name == "linear":
            res, _ = estimate_linear(sample)
        else:
            res = estimate_mre(sample, lse_result.alpha_hat, config.search)
        results[name] = replace(res, seconds=time.perf_counter() - t0)
    return results
