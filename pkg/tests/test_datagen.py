import json
import math

import numpy as np
import pytest

from templategd import (
    ConstructionError,
    ExponentialTail,
    FeasibilityError,
    FiniteSupportDistribution,
    InvariantError,
    ParameterError,
    make_cross_entropy,
    make_hard_lower_n,
    make_hard_lower_t,
    make_random_separable,
    margin_certificate_check,
    population_risk_exact,
    sample,
)
from templategd.datagen import hard_lower_t_probability, support_margins


@pytest.mark.parametrize("k", [2, 4, 8, 16])
def test_random_instance_is_certified(k):
    dist = make_random_separable(20, k, 0.125, 200, seed=k)
    gamma = margin_certificate_check(dist)
    assert gamma >= 0.125 - 1e-12
    assert np.linalg.norm(dist.certificate) <= 1 + 1e-12
    assert np.all(np.linalg.norm(dist.X, axis=1) <= 1 + 1e-12)
    assert dist.probs.sum() == pytest.approx(1.0)
    assert set(dist.y.tolist()) == set(range(k))


def test_random_instance_is_seed_deterministic():
    a = make_random_separable(8, 4, 0.1, 50, seed=np.random.SeedSequence([3, 4]))
    b = make_random_separable(8, 4, 0.1, 50, seed=np.random.SeedSequence([3, 4]))
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.certificate, b.certificate)


def test_random_instance_rejects_impossible_margin():
    with pytest.raises((ConstructionError, ParameterError)):
        make_random_separable(2, 16, 0.9, 20, seed=0, max_tries=2)


def test_hard_lower_n_coordinates_and_probabilities():
    gamma, n = 0.125, 2000
    dist = make_hard_lower_n(gamma, n, k=4)
    expected_X = np.array([[1.0, 0.0, 0.0], [-0.5, 0.375, 0.0], [0.0, -0.125, 0.75]])
    np.testing.assert_array_equal(dist.X, expected_X)
    expected_p = [59 / 64 * (1 - 1 / n), 5 / 64 * (1 - 1 / n), 1 / n]
    np.testing.assert_array_equal(dist.probs, expected_p)
    assert dist.y.tolist() == [0, 0, 0]
    assert margin_certificate_check(dist) == pytest.approx(gamma, abs=1e-12)


def test_hard_lower_t_worked_example():
    gamma, k, T, eta, eps = 1 / 8, 4, 10**6, 1 / 24, 1 / 16
    dist = make_hard_lower_t(gamma, k, T, eta, eps, ExponentialTail())
    # independent evaluation: rho^{-1}(16 eps / k) = ln(k / (16 eps)) for exp(-x)
    p_ref = math.log(k / (16 * eps)) / (72 * gamma**2 * T * k * eta)
    assert dist.probs[1] == pytest.approx(p_ref, rel=1e-12)
    assert dist.probs[1] == pytest.approx(7.39e-6, rel=1e-3)
    assert margin_certificate_check(dist) == pytest.approx(gamma, abs=1e-12)


def test_hard_lower_t_infeasible():
    with pytest.raises(FeasibilityError):
        make_hard_lower_t(1 / 8, 4, 10, 1 / 24, 1 / 16)
    with pytest.raises(FeasibilityError):
        make_hard_lower_t(1 / 8, 4, 10**6, 1 / 24, 0.5)
    assert hard_lower_t_probability(1 / 8, 4, 10**6, 1 / 24, 1 / 16, ExponentialTail()) > 0


def test_certificate_check_catches_violations():
    dist = make_hard_lower_n(0.125, 100)
    bad = FiniteSupportDistribution(dist.X, dist.y, dist.probs, dist.k, dist.certificate * 0.5, 0.125)
    with pytest.raises(InvariantError):
        margin_certificate_check(bad)


def test_json_round_trip():
    dist = make_random_separable(5, 3, 0.125, 30, seed=1)
    back = FiniteSupportDistribution.from_json(dist.to_json())
    np.testing.assert_array_equal(back.X, dist.X)
    np.testing.assert_array_equal(back.probs, dist.probs)
    assert json.loads(dist.to_json())["k"] == 3


def test_sampling_and_exact_risk():
    dist = make_hard_lower_n(0.125, 100, k=3)
    data = sample(dist, 5000, seed=2)
    assert data.n == 5000
    freq = np.mean(np.all(data.X == dist.X[2], axis=1))
    assert abs(freq - 0.01) < 0.006
    loss = make_cross_entropy(3)
    W = np.zeros((3, 3))
    assert population_risk_exact(loss, W, dist) == pytest.approx(math.log(3))
    m = support_margins(dist.certificate, dist.X, dist.y)
    assert m.min() == pytest.approx(0.125)
