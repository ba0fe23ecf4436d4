import numpy as np
import pytest

from templategd import (
    ExponentialTail,
    PolynomialTail,
    make_cross_entropy,
    make_phi_linear_tail,
    make_phi_quadratic_tail,
    make_random_separable,
    make_sum_univariate,
    sample,
)


def loss_zoo(k):
    """One instance of every smooth loss family for ``k`` classes."""
    return [
        make_cross_entropy(k, 1.0),
        make_cross_entropy(k, 2.0),
        make_sum_univariate(k, make_phi_quadratic_tail(ExponentialTail(1.0))),
        make_sum_univariate(k, make_phi_linear_tail(ExponentialTail(1.0))),
        make_sum_univariate(k, make_phi_quadratic_tail(PolynomialTail(0.5))),
        make_sum_univariate(k, make_phi_linear_tail(PolynomialTail(1.0))),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_random_dist():
    return make_random_separable(6, 3, 0.125, 60, seed=11)


@pytest.fixture(scope="session")
def small_dataset(small_random_dist):
    return sample(small_random_dist, 40, seed=12)
