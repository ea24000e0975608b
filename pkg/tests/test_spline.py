import numpy as np
import pytest

from monosindex import eval_spline, eval_spline_derivative, fit_smoothing_spline, roughness
from monosindex.spline import SplineFit, merge_knots


def dense_spline_solve(t, y, w, mu):
    """Independent oracle: dense normal equations in the same
    value / second-derivative representation."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    w = np.asarray(w, float)
    m = t.size
    h = np.diff(t)
    Q = np.zeros((m, m - 2))
    R = np.zeros((m - 2, m - 2))
    for col, i in enumerate(range(1, m - 1)):
        Q[i - 1, col] = 1.0 / h[i - 1]
        Q[i, col] = -1.0 / h[i - 1] - 1.0 / h[i]
        Q[i + 1, col] = 1.0 / h[i]
        R[col, col] = (h[i - 1] + h[i]) / 3.0
        if col + 1 <= m - 3:
            R[col, col + 1] = R[col + 1, col] = h[i] / 6.0
    W_inv = np.diag(1.0 / w)
    gamma_int = np.linalg.solve(R + mu * Q.T @ W_inv @ Q, Q.T @ y)
    g = y - mu * W_inv @ Q @ gamma_int
    gamma = np.zeros(m)
    gamma[1:-1] = gamma_int
    return g, gamma


def random_instance(rng, m=None):
    m = m or int(rng.integers(3, 13))
    t = np.sort(rng.uniform(-4.0, 4.0, size=m))
    while np.any(np.diff(t) < 1e-6):
        t = np.sort(rng.uniform(-4.0, 4.0, size=m))
    y = np.sin(t) + rng.normal(0, 0.4, size=m)
    w = rng.uniform(0.5, 3.0, size=m)
    mu = float(rng.uniform(0.01, 2.0))
    return t, y, w, mu


class TestSolver:
    def test_matches_dense_oracle(self, rng):
        for _ in range(30):
            t, y, w, mu = random_instance(rng)
            fit = fit_smoothing_spline(t, y, w, mu)
            g, gamma = dense_spline_solve(t, y, w, mu)
            np.testing.assert_allclose(fit.values, g, atol=1e-8)
            np.testing.assert_allclose(fit.second_derivs, gamma, atol=1e-8)

    def test_two_points_give_line(self):
        fit = fit_smoothing_spline([0.0, 1.0], [1.0, 3.0], [1.0, 1.0], 0.5)
        np.testing.assert_array_equal(fit.values, [1.0, 3.0])
        np.testing.assert_array_equal(fit.second_derivs, [0.0, 0.0])
        assert eval_spline(fit, 0.5) == pytest.approx(2.0)

    def test_huge_penalty_matches_ols_line(self, rng):
        t = np.sort(rng.uniform(-3, 3, 20))
        y = rng.normal(size=20)
        w = np.ones(20)
        fit = fit_smoothing_spline(t, y, w, 1e9)
        A = np.column_stack([np.ones(20), t])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        np.testing.assert_allclose(fit.values, A @ coef, atol=1e-4)

    def test_tiny_penalty_interpolates(self, rng):
        # well-separated knots: the residual scale is mu / gap^3
        t = np.linspace(-3, 3, 15) + rng.uniform(-0.1, 0.1, 15)
        y = rng.normal(size=15)
        fit = fit_smoothing_spline(t, y, np.ones(15), 1e-9)
        np.testing.assert_allclose(fit.values, y, atol=1e-5)

    def test_residual_orthogonal_to_linear_functions(self, rng):
        for _ in range(10):
            t, y, w, mu = random_instance(rng)
            fit = fit_smoothing_spline(t, y, w, mu)
            r = y - fit.values
            assert abs(np.dot(w, r)) < 1e-8
            assert abs(np.dot(w * t, r)) < 1e-8

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            fit_smoothing_spline([0.0, 0.0, 1.0], [1.0, 2.0, 3.0], np.ones(3), 0.1)
        with pytest.raises(ValueError):
            fit_smoothing_spline([0.0, 1.0], [1.0, 2.0], np.ones(2), 0.0)
        with pytest.raises(ValueError):
            fit_smoothing_spline([0.0, 1.0], [1.0, 2.0], [1.0, -1.0], 0.1)
        with pytest.raises(ValueError):
            fit_smoothing_spline([0.0], [1.0], [1.0], 0.1)


class TestEvaluation:
    def test_exact_at_knots(self, rng):
        t, y, w, mu = random_instance(rng, m=9)
        fit = fit_smoothing_spline(t, y, w, mu)
        np.testing.assert_allclose(eval_spline(fit, t), fit.values, atol=1e-12)

    def test_linear_extension_above(self, rng):
        t, y, w, mu = random_instance(rng, m=8)
        fit = fit_smoothing_spline(t, y, w, mu)
        slope = eval_spline_derivative(fit, t[-1])
        assert eval_spline(fit, t[-1] + 2.0) == pytest.approx(fit.values[-1] + 2.0 * slope, rel=1e-12)
        assert eval_spline_derivative(fit, t[-1] + 5.0) == pytest.approx(slope, rel=1e-12)

    def test_two_point_constant_slope(self):
        fit = fit_smoothing_spline([0.0, 2.0], [1.0, 5.0], [1.0, 1.0], 0.3)
        for u in (-1.0, 0.5, 3.0):
            assert eval_spline_derivative(fit, u) == pytest.approx(2.0)

    def test_derivative_matches_finite_differences(self, rng):
        t, y, w, mu = random_instance(rng, m=11)
        fit = fit_smoothing_spline(t, y, w, mu)
        grid = np.linspace(t[0] + 0.05, t[-1] - 0.05, 40)
        # keep clear of knots where the third derivative jumps
        grid = grid[np.min(np.abs(grid[:, None] - t[None, :]), axis=1) > 1e-4]
        step = 1e-5
        fd = (eval_spline(fit, grid + step) - eval_spline(fit, grid - step)) / (2 * step)
        np.testing.assert_allclose(eval_spline_derivative(fit, grid), fd, rtol=1e-4, atol=1e-7)


class TestRoughness:
    def test_line_has_zero_roughness(self):
        fit = fit_smoothing_spline([0.0, 1.0], [0.0, 1.0], [1.0, 1.0], 0.1)
        assert roughness(fit) == 0.0

    def test_nonnegative(self, rng):
        for _ in range(5):
            t, y, w, mu = random_instance(rng)
            assert roughness(fit_smoothing_spline(t, y, w, mu)) >= 0.0

    def test_monotone_in_penalty(self, rng):
        t, y, w, _ = random_instance(rng, m=12)
        fits = [fit_smoothing_spline(t, y, w, mu) for mu in (0.01, 0.1, 1.0, 10.0)]
        rough = [roughness(f) for f in fits]
        assert all(a >= b - 1e-12 for a, b in zip(rough[:-1], rough[1:]))
        rss = [float(np.dot(f.weights, (y - f.values) ** 2)) for f in fits]
        assert all(a <= b + 1e-12 for a, b in zip(rss[:-1], rss[1:]))

    def test_criterion_optimality_between_penalties(self, rng):
        # the mu-fit must beat the other fit on its own criterion
        t, y, w, _ = random_instance(rng, m=10)
        f1 = fit_smoothing_spline(t, y, w, 0.05)
        f2 = fit_smoothing_spline(t, y, w, 5.0)

        def crit(f, mu):
            return float(np.dot(w, (y - f.values) ** 2)) + mu * roughness(f)

        assert crit(f1, 0.05) <= crit(f2, 0.05) + 1e-10
        assert crit(f2, 5.0) <= crit(f1, 5.0) + 1e-10


class TestMergeKnots:
    def test_pools_near_duplicates(self):
        t = np.array([0.0, 1.0, 1.0, 2.0])
        y = np.array([0.0, 1.0, 3.0, 5.0])
        knots, y_m, w_m, gid = merge_knots(t, y)
        np.testing.assert_array_equal(knots, [0.0, 1.0, 2.0])
        np.testing.assert_array_equal(y_m, [0.0, 2.0, 5.0])
        np.testing.assert_array_equal(w_m, [1.0, 2.0, 1.0])
        np.testing.assert_array_equal(gid, [0, 1, 1, 2])

    def test_preserves_distinct_points(self, rng):
        t = np.sort(rng.uniform(-1, 1, 20))
        y = rng.normal(size=20)
        knots, y_m, w_m, gid = merge_knots(t, y)
        assert knots.size == 20
        np.testing.assert_array_equal(gid, np.arange(20))

    def test_merged_fit_minimizes_unmerged_criterion(self, rng):
        # merging duplicates with multiplicity weights preserves the
        # minimizer of the original (unweighted) criterion
        t = np.repeat(np.sort(rng.uniform(-2, 2, 8)), 2)
        y = rng.normal(size=16)
        knots, y_m, w_m, _ = merge_knots(t, y)
        fit = fit_smoothing_spline(knots, y_m, w_m, 0.5)
        g, _ = dense_spline_solve(knots, y_m, w_m, 0.5)
        np.testing.assert_allclose(fit.values, g, atol=1e-8)

    def test_natural_boundary_enforced(self):
        with pytest.raises(ValueError):
            SplineFit(
                knots=np.array([0.0, 1.0, 2.0]),
                values=np.zeros(3),
                second_derivs=np.array([0.1, 0.0, 0.0]),
                penalty=1.0,
                weights=np.ones(3),
            )
