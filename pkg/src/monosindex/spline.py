# Natural cubic smoothing spline in the value / second-derivative
# representation, solved through the banded (Reinsch) scheme.
#
# For knots t_1 < ... < t_m with weights w_i > 0, the fit minimizes
#
#     sum_i w_i (f(t_i) - y_i)^2 + mu * int f''(x)^2 dx
#
# over twice-differentiable functions. With g_i = f(t_i) and
# gamma_i = f''(t_i) (gamma_1 = gamma_m = 0, natural boundary), the
# optimum satisfies   (R + mu Q' W^{-1} Q) gamma = Q' y,
# g = y - mu W^{-1} Q gamma, where Q is the second-difference operator
# and R the tridiagonal Gram matrix of the piecewise-linear f''. The
# system is pentadiagonal and solved in O(m).

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

__all__ = [
    "SplineFit",
    "fit_smoothing_spline",
    "eval_spline",
    "eval_spline_derivative",
    "roughness",
    "merge_knots",
]

# Knots closer than this fraction of the data range are merged by callers.
# The value matches common smoothing-spline practice: gaps much below it
# put entries of order mu/h^2 against O(1) ones in the band system, whose
# factorization then loses positive definiteness in double precision.
MERGE_TOL = 1e-6


@dataclass(frozen=True)
class SplineFit:
    """Fitted natural cubic smoothing spline.

    Attributes
    ----------
    knots : (m,) ndarray
        Strictly increasing abscissas.
    values : (m,) ndarray
        Fitted values g_i = f(knots_i).
    second_derivs : (m,) ndarray
        f'' at the knots; the first and last entries are exactly 0.
    penalty : float
        Roughness penalty mu used for the fit.
    weights : (m,) ndarray
        Positive weights (multiplicities after tie-merging).
    """

    knots: np.ndarray
    values: np.ndarray
    second_derivs: np.ndarray
    penalty: float
    weights: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        gamma = np.asarray(self.second_derivs, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        m = knots.size
        if m < 2:
            raise ValueError("a spline fit needs at least 2 knots")
        if not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        if values.shape != (m,) or gamma.shape != (m,) or weights.shape != (m,):
            raise ValueError("values, second_derivs and weights must match the knots")
        if gamma[0] != 0.0 or gamma[-1] != 0.0:
            raise ValueError("natural boundary requires zero second derivative at the end knots")
        if not (self.penalty > 0 and np.isfinite(self.penalty)):
            raise ValueError("penalty must be a positive real")
        for name, a in (("knots", knots), ("values", values), ("second_derivs", gamma), ("weights", weights)):
            a = np.ascontiguousarray(a)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def m(self) -> int:
        return self.knots.size


def merge_knots(ts: np.ndarray, ys: np.ndarray, tol: float = MERGE_TOL):
    """Collapse near-duplicate sorted abscissas into weighted knots.

    Points closer than tol * (data range) are pooled to their mean abscissa
    and mean response; the pooled weight is the multiplicity. Returns
    (knots, responses, weights, group) where group[i] is the knot index of
    original point i.
    """
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ts.ndim != 1 or ys.shape != ts.shape or ts.size == 0:
        raise ValueError("ts and ys must be nonempty 1-d arrays of equal length")
    if np.any(np.diff(ts) < 0):
        raise ValueError("ts must be sorted ascending")
    span = ts[-1] - ts[0]
    gap = tol * span
    # group boundaries where consecutive points are separated by more than gap
    new_group = np.empty(ts.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(ts) > gap
    gid = np.cumsum(new_group) - 1
    counts = np.bincount(gid).astype(float)
    t_m = np.bincount(gid, weights=ts) / counts
    y_m = np.bincount(gid, weights=ys) / counts
    return t_m, y_m, counts, gid


def fit_smoothing_spline(ts, ys, weights, mu: float) -> SplineFit:
    """Fit the weighted natural cubic smoothing spline.

    Parameters
    ----------
    ts : (m,) array
        Strictly increasing knots (merge duplicates first), m >= 2.
    ys : (m,) array
        Responses at the knots.
    weights : (m,) array
        Strictly positive weights.
    mu : float
        Positive roughness penalty.
    """
    t = np.asarray(ts, dtype=float)
    y = np.asarray(ys, dtype=float)
    w = np.asarray(weights, dtype=float)
    m = t.size
    if m < 2:
        raise ValueError("need at least 2 knots")
    if y.shape != (m,) or w.shape != (m,):
        raise ValueError("ts, ys and weights must have equal length")
    if not np.all(np.diff(t) > 0):
        raise ValueError("knots must be strictly increasing")
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    if not (mu > 0 and np.isfinite(mu)):
        raise ValueError("mu must be a positive real")

    if m == 2:
        # The straight line through both points has zero roughness and
        # zero residual, hence is the exact minimizer.
        return SplineFit(knots=t, values=y.copy(), second_derivs=np.zeros(2), penalty=float(mu), weights=w)

    h = np.diff(t)                      # (m-1,)
    inv_h = 1.0 / h
    inv_w = 1.0 / w

    # rhs_i = second difference of y at interior knot i (i = 1..m-2)
    dy = np.diff(y) * inv_h
    rhs = dy[1:] - dy[:-1]

    # R: Gram matrix of the hat functions of gamma on the interior knots.
    r_main = (h[:-1] + h[1:]) / 3.0     # (m-2,)
    r_off = h[1:-1] / 6.0               # (m-3,)

    # Q' W^{-1} Q, pentadiagonal. Column i of Q has entries
    # 1/h_{i-1}, -(1/h_{i-1} + 1/h_i), 1/h_i at rows i-1, i, i+1.
    diag_sum = -(inv_h[:-1] + inv_h[1:])          # Q_{i,i} for interior i   (m-2,)
    b_main = inv_w[:-2] * inv_h[:-1] ** 2 + inv_w[1:-1] * diag_sum**2 + inv_w[2:] * inv_h[1:] ** 2
    b_off1 = inv_w[1:-1] * diag_sum * inv_h[1:]
    b_off1 = b_off1[:-1] + inv_w[2:-1] * inv_h[1:-1] * diag_sum[1:] if m > 3 else b_off1[:0]
    b_off2 = inv_w[2:-2] * inv_h[1:-2] * inv_h[2:-1] if m > 4 else np.zeros(0)

    # Assemble in solveh_banded upper form: row 0 = 2nd super, row 1 = 1st
    # super, row 2 = main diagonal.
    k = m - 2
    ab = np.zeros((3, k))
    ab[2] = r_main + mu * b_main
    if k > 1:
        ab[1, 1:] = r_off + mu * b_off1
    if k > 2:
        ab[0, 2:] = mu * b_off2
    # Jacobi equilibration: near-coincident knots put entries of order
    # 1/h^2 next to O(1) ones, which can defeat the banded Cholesky even
    # though the system is positive definite; scaling to a unit diagonal
    # restores a bounded condition number without changing the solution.
    scale = 1.0 / np.sqrt(ab[2])
    ab_s = np.zeros_like(ab)
    ab_s[2] = 1.0
    if k > 1:
        ab_s[1, 1:] = ab[1, 1:] * scale[1:] * scale[:-1]
    if k > 2:
        ab_s[0, 2:] = ab[0, 2:] * scale[2:] * scale[:-2]
    gamma_int = solveh_banded(ab_s[-min(3, k):], rhs * scale, lower=False) * scale

    gamma = np.zeros(m)
    gamma[1:-1] = gamma_int

    # g = y - mu W^{-1} Q gamma; (Q gamma)_k is the adjoint second difference.
    dgamma = np.diff(gamma) * inv_h              # (m-1,)
    q_gamma = np.diff(np.concatenate(([0.0], dgamma, [0.0])))
    g = y - mu * inv_w * q_gamma
    return SplineFit(knots=t, values=g, second_derivs=gamma, penalty=float(mu), weights=w)


def _interval_pieces(fit: SplineFit, u: np.ndarray):
    """Clip evaluation points into knot intervals; returns piece data."""
    t, g, c = fit.knots, fit.values, fit.second_derivs
    idx = np.clip(np.searchsorted(t, u, side="right") - 1, 0, fit.m - 2)
    h = t[idx + 1] - t[idx]
    left = u - t[idx]
    right = t[idx + 1] - u
    return idx, h, left, right, t, g, c


def _boundary_slopes(fit: SplineFit) -> tuple[float, float]:
    t, g, c = fit.knots, fit.values, fit.second_derivs
    h0 = t[1] - t[0]
    h1 = t[-1] - t[-2]
    s_lo = (g[1] - g[0]) / h0 - h0 * (2.0 * c[0] + c[1]) / 6.0
    s_hi = (g[-1] - g[-2]) / h1 + h1 * (c[-2] + 2.0 * c[-1]) / 6.0
    return float(s_lo), float(s_hi)


def eval_spline(fit: SplineFit, u):
    """Evaluate the spline; linear extension beyond the boundary knots."""
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    idx, h, left, right, t, g, c = _interval_pieces(fit, u)
    val = (
        c[idx] * right**3 / (6.0 * h)
        + c[idx + 1] * left**3 / (6.0 * h)
        + (g[idx] / h - c[idx] * h / 6.0) * right
        + (g[idx + 1] / h - c[idx + 1] * h / 6.0) * left
    )
    s_lo, s_hi = _boundary_slopes(fit)
    below = u < t[0]
    above = u > t[-1]
    if below.any():
        val[below] = g[0] + s_lo * (u[below] - t[0])
    if above.any():
        val[above] = g[-1] + s_hi * (u[above] - t[-1])
    return float(val[0]) if scalar else val


def eval_spline_derivative(fit: SplineFit, u):
    """Exact first derivative; constant beyond the boundary knots."""
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    idx, h, left, right, t, g, c = _interval_pieces(fit, u)
    der = (
        -c[idx] * right**2 / (2.0 * h)
        + c[idx + 1] * left**2 / (2.0 * h)
        + (g[idx + 1] - g[idx]) / h
        - (c[idx + 1] - c[idx]) * h / 6.0
    )
    s_lo, s_hi = _boundary_slopes(fit)
    der[u < t[0]] = s_lo
    der[u > t[-1]] = s_hi
    return float(der[0]) if scalar else der


def roughness(fit: SplineFit) -> float:
    """Exact integral of f''(x)^2 over the knot range.

    f'' is piecewise linear between the knot values gamma_i, so the
    integral is the exact quadratic form sum_i h_i (c_i^2 + c_i c_{i+1}
    + c_{i+1}^2) / 3.
    """
    c = fit.second_derivs
    h = np.diff(fit.knots)
    return float(np.sum(h * (c[:-1] ** 2 + c[:-1] * c[1:] + c[1:] ** 2)) / 3.0)
