# Weighted isotonic least squares and the step-function link estimate.
#
# The inner fit used by the profile least squares criterion and by the
# score estimators: order the data by alpha'x_i, then replace the ordered
# responses by the closest (weighted least squares) nondecreasing vector.
# Only nondecreasing fits are provided; a decreasing link is handled by
# negating responses at the estimator layer.

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression

from .model import Sample, project_sample

__all__ = ["StepFunction", "pava", "fit_monotone_ls", "eval_step", "step_from_sorted_fit"]


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous nondecreasing step function.

    `taus` are the strictly increasing jump locations and `levels` the
    block values, with len(levels) == len(taus) + 1: levels[k] is the value
    on [taus[k-1], taus[k]) extended constantly outside the data range.
    """

    taus: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        levels = np.asarray(self.levels, dtype=float)
        if levels.size != taus.size + 1:
            raise ValueError("levels must have exactly one more entry than taus")
        if taus.size and not np.all(np.diff(taus) > 0):
            raise ValueError("taus must be strictly increasing")
        if np.any(np.diff(levels) < 0):
            raise ValueError("levels must be nondecreasing")
        if not (np.isfinite(taus).all() and np.isfinite(levels).all()):
            raise ValueError("step function entries must be finite")
        for name, a in (("taus", taus), ("levels", levels)):
            a = np.ascontiguousarray(a)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def jump_sizes(self) -> np.ndarray:
        """Nonnegative level increments at each jump location."""
        return np.diff(self.levels)


def pava(values, weights) -> np.ndarray:
    """Weighted isotonic regression by pool-adjacent-violators.

    Returns the nondecreasing vector minimizing sum w_i (v_i - out_i)^2;
    pooled blocks carry the weighted mean of their members.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.ndim != 1 or w.shape != v.shape:
        raise ValueError("values and weights must be 1-d arrays of equal length")
    if np.any(w <= 0) or not np.isfinite(w).all():
        raise ValueError("weights must be strictly positive and finite")
    if not np.isfinite(v).all():
        raise ValueError("values must be finite")
    return np.asarray(isotonic_regression(v, weights=w, increasing=True).x, dtype=float)


def _merged_levels(ts: np.ndarray, ys_ordered: np.ndarray):
    """PAVA on tie-merged projections.

    Returns (t_unique, fit_unique, inverse) with fit_unique the isotonic
    fit on the distinct projected values; duplicate projections are merged
    to their mean response with multiplicity weights, which preserves the
    least squares minimizer over monotone functions of t.
    """
    if ts.size and np.any(np.diff(ts) == 0.0):
        t_unique, inverse, counts = np.unique(ts, return_inverse=True, return_counts=True)
        y_mean = np.bincount(inverse, weights=ys_ordered) / counts
        fit_unique = pava(y_mean, counts.astype(float))
        return t_unique, fit_unique, inverse
    fit = pava(ys_ordered, np.ones_like(ys_ordered))
    return ts, fit, None


def monotone_fit_sorted(sample: Sample, alpha) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ordered projections, fitted values at them, and the sort permutation.

    Fast path shared by the criterion and score evaluations: avoids
    building a StepFunction when only the fitted values at the data points
    are needed. Fitted values are returned in projection (sorted) order.
    """
    proj = project_sample(sample, alpha)
    _, fit_unique, inverse = _merged_levels(proj.ts, proj.ys_ordered)
    fitted = fit_unique if inverse is None else fit_unique[inverse]
    return proj.ts, fitted, proj.order


def step_from_sorted_fit(ts: np.ndarray, fitted: np.ndarray) -> StepFunction:
    """Build the StepFunction for a monotone fit given in sorted order.

    `ts` must be nondecreasing and `fitted` the nondecreasing fitted values
    at those points, constant within tie groups of ts.
    """
    rises = np.flatnonzero(np.diff(fitted) > 0)
    taus = ts[rises + 1]
    levels = np.concatenate(([fitted[0]], fitted[rises + 1]))
    return StepFunction(taus=taus, levels=levels)


def fit_monotone_ls(sample: Sample, alpha) -> StepFunction:
    """Isotonic least squares fit of the responses against alpha'x_i.

    The result depends on alpha only through the induced ordering, so any
    positive multiple of alpha gives identical fitted values at the data.
    """
    ts, fitted, _ = monotone_fit_sorted(sample, alpha)
    return step_from_sorted_fit(ts, fitted)


def eval_step(f: StepFunction, u):
    """Evaluate the step function (right-continuous, clamped outside)."""
    u = np.asarray(u, dtype=float)
    idx = np.searchsorted(f.taus, u, side="right")
    out = f.levels[idx]
    return float(out) if out.ndim == 0 else out
