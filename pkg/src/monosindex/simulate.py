# Replication engine and summary statistics for the estimator comparison.
#
# Each replication draws a fresh sample from its own substream and runs the
# warm-start pipeline; results are therefore identical for any worker
# count and any execution order. Summaries report per-coordinate means,
# n-scaled covariances and the scaled error sqrt(n/d) * ||alpha_hat -
# alpha0|| per replication (the boxplot metric).

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimators import ESTIMATOR_NAMES, PipelineConfig, warm_start_pipeline
from .kernel import BandwidthRule
from .model import ModelSpec, derive_seed, generate_sample
from .search import SearchOptions

__all__ = [
    "SimConfig",
    "ReplicationRow",
    "SimulationSummary",
    "EstimatorSummary",
    "BoxplotStats",
    "run_replications",
    "summarize",
    "boxplot_stats",
]

# stream ids under each replication's seed path
_SAMPLE_STREAM = 0
_SEARCH_STREAM = 1


@dataclass(frozen=True)
class SimConfig:
    """Replication study settings."""

    spec: ModelSpec
    n: int
    reps: int
    estimators: tuple[str, ...] = ESTIMATOR_NAMES
    seed: int = 0
    n_starts: int = 20
    mu: float = 0.1
    bandwidth_constant: float = 0.5
    workers: int = 1
    search: SearchOptions = SearchOptions()

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.n < self.spec.d + 1:
            raise ValueError("n must be at least d + 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        unknown = set(self.estimators) - set(ESTIMATOR_NAMES)
        if unknown:
            raise ValueError(f"unknown estimators: {sorted(unknown)}")
        object.__setattr__(self, "estimators", tuple(self.estimators))

    def pipeline_config(self, rep: int) -> PipelineConfig:
        return PipelineConfig(
            estimators=self.estimators,
            n_starts=self.n_starts,
            seed=derive_seed(self.seed, rep, _SEARCH_STREAM),
            mu=self.mu,
            bandwidth=BandwidthRule(constant=self.bandwidth_constant),
            search=self.search,
        )


@dataclass(frozen=True)
class ReplicationRow:
    """One estimator outcome in one replication.

    `error` is None on success; on failure it carries the message and the
    numeric fields are NaN.
    """

    rep: int
    estimator: str
    alpha: tuple[float, ...]
    criterion: float
    evals: int
    seconds: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_one(config: SimConfig, rep: int) -> list[ReplicationRow]:
    sample = generate_sample(config.spec, config.n, derive_seed(config.seed, rep, _SAMPLE_STREAM))
    pipeline = config.pipeline_config(rep)
    rows: list[ReplicationRow] = []
    try:
        results = warm_start_pipeline(sample, pipeline)
        for name in config.estimators:
            r = results[name]
            rows.append(
                ReplicationRow(
                    rep=rep,
                    estimator=name,
                    alpha=tuple(float(a) for a in r.alpha_hat),
                    criterion=float(r.criterion),
                    evals=int(r.evals),
                    seconds=float(r.seconds),
                )
            )
    except Exception as exc:  # failures are recorded per-rep, not fatal
        nan = tuple([float("nan")] * config.spec.d)
        for name in config.estimators:
            rows.append(
                ReplicationRow(
                    rep=rep, estimator=name, alpha=nan, criterion=float("nan"),
                    evals=0, seconds=0.0, error=f"{type(exc).__name__}: {exc}",
                )
            )
    return rows


def run_replications(config: SimConfig) -> list[ReplicationRow]:
    """Run all replications; deterministic given the seed, regardless of
    the worker count. Rows come back ordered by (rep, estimator order)."""
    reps = range(1, config.reps + 1)
    if config.workers == 1:
        chunks = [_run_one(config, rep) for rep in reps]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_run_one, [config] * config.reps, reps, chunksize=1))
    return [row for chunk in chunks for row in chunk]


@dataclass(frozen=True)
class BoxplotStats:
    """Five-number summary plus 1.5 IQR outliers (linear-interp quartiles)."""

    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    outliers: tuple[float, ...]


def boxplot_stats(values) -> BoxplotStats:
    """Five-number summary of a nonempty collection of reals."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("boxplot_stats needs at least one value")
    if not np.isfinite(v).all():
        raise ValueError("boxplot_stats requires finite values")
    q1, med, q3 = (float(q) for q in np.percentile(v, [25.0, 50.0, 75.0]))
    iqr = q3 - q1
    lo = q1 - 1.5 * iqr
    hi = q3 + 1.5 * iqr
    outliers = tuple(float(x) for x in np.sort(v[(v < lo) | (v > hi)]))
    return BoxplotStats(
        minimum=float(v.min()), q1=q1, median=med, q3=q3, maximum=float(v.max()), outliers=outliers
    )


@dataclass(frozen=True)
class EstimatorSummary:
    """Per-estimator replication summary."""

    estimator: str
    reps_used: int
    failures: int
    means: np.ndarray
    scaled_cov: np.ndarray
    scaled_errors: np.ndarray
    wall_seconds: float

    def __post_init__(self):
        for name in ("means", "scaled_cov", "scaled_errors"):
            a = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            a.setflags(write=False)
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class SimulationSummary:
    """Summaries keyed by estimator name, plus the scaling inputs."""

    n: int
    alpha0: np.ndarray
    estimators: dict[str, EstimatorSummary] = field(default_factory=dict)

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.alpha0, dtype=float))
        a.setflags(write=False)
        object.__setattr__(self, "alpha0", a)


def summarize(rows: list[ReplicationRow], alpha0, n: int) -> SimulationSummary:
    """Means, n-scaled covariance (reps - 1 denominator) and scaled errors.

    Failed replications are excluded and counted; an estimator with fewer
    than 2 successful replications is rejected.
    """
    alpha0 = np.asarray(alpha0, dtype=float)
    d = alpha0.size
    names = []
    for row in rows:
        if row.estimator not in names:
            names.append(row.estimator)
    out: dict[str, EstimatorSummary] = {}
    for name in names:
        good = [r for r in rows if r.estimator == name and r.ok]
        failures = sum(1 for r in rows if r.estimator == name and not r.ok)
        if len(good) < 2:
            raise ValueError(f"estimator {name!r} has {len(good)} successful replications; need at least 2")
        a = np.array([r.alpha for r in good], dtype=float)
        if a.shape[1] != d:
            raise ValueError("alpha0 dimension does not match the replication table")
        means = a.mean(axis=0)
        centered = a - means
        scaled_cov = n * (centered.T @ centered) / (len(good) - 1)
        errors = np.sqrt(n / d) * np.linalg.norm(a - alpha0, axis=1)
        out[name] = EstimatorSummary(
            estimator=name,
            reps_used=len(good),
            failures=failures,
            means=means,
            scaled_cov=scaled_cov,
            scaled_errors=errors,
            wall_seconds=float(sum(r.seconds for r in good)),
        )
    return SimulationSummary(n=n, alpha0=alpha0, estimators=out)
