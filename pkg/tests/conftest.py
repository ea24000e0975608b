import numpy as np
import pytest

from monosindex import Sample, cubic_normal_spec, generate_sample


@pytest.fixture(scope="session")
def model_spec():
    return cubic_normal_spec()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture()
def small_sample(model_spec):
    return generate_sample(model_spec, 60, seed=11)


def random_sample(rng, n=40, d=3, noise=1.0):
    """Hand-rolled sample helper for tests that need arbitrary data."""
    xs = rng.normal(size=(n, d))
    ys = (xs @ np.full(d, 1.0 / np.sqrt(d))) ** 3 + noise * rng.normal(size=n)
    return Sample(xs=xs, ys=ys)
