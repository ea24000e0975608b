# Projected score vectors whose zero crossings define the score-based
# index estimators, and the scale-free norm objective the searches minimize.
#
# Each score has the form
#
#     (1/n) (I - a a') sum_i resid_i * weight_i * x_i
#
# with residuals from the link fit at direction a. The projection
# (I - a a') removes the component along a, which is how the unit-norm
# side condition enters; solving "score = 0" is operationalized as
# minimizing the Euclidean norm of the score.

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .isotonic import monotone_fit_sorted, step_from_sorted_fit
from .kernel import BandwidthRule, default_bandwidth, derivative_estimate
from .model import Sample, project_sample
from .spline import eval_spline_derivative, fit_smoothing_spline, merge_knots

__all__ = [
    "ScoreValue",
    "project_orthogonal",
    "sse_score",
    "ese_score",
    "plse_score",
    "score_norm_objective",
]

SCORE_KINDS = ("sse", "ese", "plse")

# Directions shorter than this are treated as degenerate by the objective.
_MIN_NORM = 1e-8


@dataclass(frozen=True)
class ScoreValue:
    """A projected score vector and its Euclidean norm."""

    vector: np.ndarray
    norm: float

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vector, dtype=float))
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)


def _check_unit(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if abs(np.linalg.norm(alpha) - 1.0) > _MIN_NORM:
        raise ValueError("alpha must have unit Euclidean norm")
    return alpha


def project_orthogonal(alpha, v) -> np.ndarray:
    """Project v onto the orthogonal complement of the unit vector alpha."""
    alpha = _check_unit(alpha)
    v = np.asarray(v, dtype=float)
    return v - (alpha @ v) * alpha


def _projected_sum(sample: Sample, alpha: np.ndarray, contributions: np.ndarray, order: np.ndarray) -> ScoreValue:
    raw = sample.xs[order].T @ contributions / sample.n
    vec = project_orthogonal(alpha, raw)
    return ScoreValue(vector=vec, norm=float(np.linalg.norm(vec)))


def sse_score(sample: Sample, alpha) -> ScoreValue:
    """Score of the simple score estimator: residuals of the isotonic fit."""
    alpha = _check_unit(alpha)
    ts, fitted, order = monotone_fit_sorted(sample, alpha)
    resid = fitted - sample.ys[order]
    return _projected_sum(sample, alpha, resid, order)


def ese_score(sample: Sample, alpha, h: float) -> ScoreValue:
    """Efficient score: isotonic residuals weighted by the smoothed
    derivative of the isotonic fit (bandwidth h)."""
    alpha = _check_unit(alpha)
    ts, fitted, order = monotone_fit_sorted(sample, alpha)
    step = step_from_sorted_fit(ts, fitted)
    resid = fitted - sample.ys[order]
    weights = derivative_estimate(step, ts, h)
    return _projected_sum(sample, alpha, resid * weights, order)


def plse_score(sample: Sample, alpha, mu: float) -> ScoreValue:
    """Penalized least squares score: smoothing-spline residuals weighted
    by the exact spline derivative (penalty mu)."""
    alpha = _check_unit(alpha)
    if not (mu > 0 and np.isfinite(mu)):
        raise ValueError("mu must be a positive real")
    proj = project_sample(sample, alpha)
    knots, y_m, w_m, group = merge_knots(proj.ts, proj.ys_ordered)
    if knots.size < 2:
        raise ValueError("projected values are degenerate; spline fit is undefined")
    fit = fit_smoothing_spline(knots, y_m, w_m, mu)
    deriv_at_knots = eval_spline_derivative(fit, knots)
    resid = fit.values[group] - proj.ys_ordered
    return _projected_sum(sample, alpha, resid * deriv_at_knots[group], proj.order)


def _ese_bandwidth(sample: Sample, alpha: np.ndarray, rule: BandwidthRule) -> float:
    t = sample.xs @ alpha
    span = float(t.max() - t.min())
    if span <= 0:
        raise ValueError("projected values are degenerate; bandwidth is undefined")
    return default_bandwidth(sample.n, span, rule)


def score_norm_objective(
    kind: str,
    sample: Sample,
    *,
    bandwidth: BandwidthRule | None = None,
    mu: float | None = None,
) -> Callable[[np.ndarray], float]:
    """Map alpha -> ||score(alpha / ||alpha||)||_2 for the given score kind.

    The input is normalized before scoring, making the objective invariant
    under positive rescaling; directions with norm below 1e-8 return +inf.
    """
    if kind not in SCORE_KINDS:
        raise ValueError(f"kind must be one of {SCORE_KINDS}, got {kind!r}")
    if kind == "plse" and (mu is None or not mu > 0):
        raise ValueError("plse objective requires a positive mu")
    rule = bandwidth if bandwidth is not None else BandwidthRule()

    def objective(alpha) -> float:
        a = np.asarray(alpha, dtype=float)
        nrm = float(np.linalg.norm(a))
        if not np.isfinite(nrm) or nrm < _MIN_NORM:
            return np.inf
        a = a / nrm
        if kind == "sse":
            return sse_score(sample, a).norm
        try:
            if kind == "ese":
                h = _ese_bandwidth(sample, a, rule)
                return ese_score(sample, a, h).norm
            return plse_score(sample, a, mu).norm
        except (np.linalg.LinAlgError, ValueError):
            # Directions that collapse the projected design (degenerate
            # range, quasi-coincident knots breaking the banded factor)
            # are infeasible points the search must step around.
            return np.inf

    return objective
