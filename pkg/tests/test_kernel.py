import numpy as np
import pytest
from scipy.integrate import quad

from monosindex import BandwidthRule, default_bandwidth, derivative_estimate, kernel_eval
from monosindex.isotonic import StepFunction
from monosindex.kernel import KernelSpec


class TestKernel:
    def test_peak_value(self):
        assert kernel_eval(0.0) == pytest.approx(35.0 / 32.0)

    def test_compact_support(self):
        assert kernel_eval(1.5) == 0.0
        assert kernel_eval(-1.5) == 0.0
        assert kernel_eval(1.0) == 0.0

    def test_integrates_to_one(self):
        mass, _ = quad(kernel_eval, -1.0, 1.0, limit=200)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_symmetric(self, rng):
        u = rng.uniform(-1.2, 1.2, size=50)
        np.testing.assert_allclose(kernel_eval(u), kernel_eval(-u), atol=1e-15)

    def test_kernel_spec_restricts_name(self):
        assert KernelSpec().name == "triweight"
        with pytest.raises(ValueError):
            KernelSpec(name="gaussian")


class TestBandwidth:
    def test_power_of_two_case(self):
        # 128^(1/7) = 2, so h = 0.5 * 2 / 2 = 0.5
        assert default_bandwidth(128, 2.0, BandwidthRule(constant=0.5)) == pytest.approx(0.5)

    def test_single_observation(self):
        assert default_bandwidth(1, 1.0, BandwidthRule(constant=1.0)) == pytest.approx(1.0)

    def test_linear_in_range(self):
        h1 = default_bandwidth(50, 1.0, BandwidthRule(constant=0.7))
        h2 = default_bandwidth(50, 2.0, BandwidthRule(constant=0.7))
        assert h2 == pytest.approx(2.0 * h1)

    def test_validation(self):
        with pytest.raises(ValueError):
            BandwidthRule(constant=0.0)
        with pytest.raises(ValueError):
            default_bandwidth(10, 0.0)


def one_jump_step():
    return StepFunction(taus=np.array([0.0]), levels=np.array([0.0, 1.0]))


class TestDerivativeEstimate:
    def test_single_jump_peak(self):
        assert derivative_estimate(one_jump_step(), 0.0, 1.0) == pytest.approx(35.0 / 32.0)

    def test_zero_far_from_jumps(self):
        assert derivative_estimate(one_jump_step(), 2.5, 1.0) == 0.0

    def test_integral_recovers_jump_mass(self):
        step = StepFunction(taus=np.array([-1.0, 0.5, 2.0]), levels=np.array([0.0, 0.7, 1.0, 2.2]))
        grid = np.linspace(-4.0, 5.0, 20001)
        vals = derivative_estimate(step, grid, 0.6)
        mass = np.trapezoid(vals, grid)
        assert mass == pytest.approx(2.2, abs=1e-6)

    def test_invariant_under_level_shift(self, rng):
        taus = np.sort(rng.uniform(-1, 1, 4))
        levels = np.cumsum(rng.uniform(0.1, 1.0, 5))
        a = StepFunction(taus=taus, levels=levels)
        b = StepFunction(taus=taus, levels=levels + 13.0)
        u = rng.uniform(-2, 2, 20)
        np.testing.assert_allclose(derivative_estimate(a, u, 0.5), derivative_estimate(b, u, 0.5), atol=1e-14)

    def test_nonnegative(self, rng):
        taus = np.sort(rng.uniform(-1, 1, 6))
        levels = np.cumsum(rng.uniform(0.0, 1.0, 7))
        step = StepFunction(taus=taus, levels=levels)
        u = rng.uniform(-3, 3, 100)
        assert np.all(derivative_estimate(step, u, 0.4) >= 0.0)

    def test_linear_in_jump_measure(self, rng):
        taus = np.sort(rng.uniform(-1, 1, 3))
        inc = rng.uniform(0.1, 1.0, 4)
        a = StepFunction(taus=taus, levels=np.cumsum(inc))
        b = StepFunction(taus=taus, levels=np.cumsum(2.0 * inc))
        u = rng.uniform(-2, 2, 25)
        np.testing.assert_allclose(
            derivative_estimate(b, u, 0.5), 2.0 * derivative_estimate(a, u, 0.5), atol=1e-12
        )

    def test_rejects_bad_bandwidth(self):
        with pytest.raises(ValueError):
            derivative_estimate(one_jump_step(), 0.0, 0.0)
