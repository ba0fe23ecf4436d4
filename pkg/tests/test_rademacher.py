import math

import numpy as np
import pytest

from templategd import Dataset, ParameterError, make_cross_entropy, make_random_separable, sample
from templategd.verify import LINEAR, RademacherQuery, estimate_rademacher, rademacher_details, rademacher_grid

FAST = dict(restarts=3, ascent_steps=60)


@pytest.fixture(scope="module")
def data():
    dist = make_random_separable(5, 3, 0.125, 100, seed=3)
    return sample(dist, 12, seed=4)


def test_linear_class_matches_closed_form():
    # sup_{||w|| <= B} (1/n) sum sigma_i <w, x_i> = (B/n) ||sum sigma_i x_i||
    rng = np.random.default_rng(0)
    X = rng.normal(size=(4, 3))
    X /= 2 * np.linalg.norm(X, axis=1, keepdims=True)
    ds = Dataset(X, np.zeros(4, dtype=int), 2)
    est = rademacher_details(RademacherQuery(LINEAR, ds, 2.0, ascent_steps=300), seed=0, exact=True)
    closed = np.mean([2.0 / 4 * np.linalg.norm(s @ X) for s in est.patterns])
    assert est.value == pytest.approx(closed, rel=1e-3)
    assert est.value <= closed * (1 + 1e-12)


def test_exact_and_monte_carlo_share_per_pattern_values(data):
    small = Dataset(data.X[:4], data.y[:4], data.k)
    q = RademacherQuery(make_cross_entropy(3), small, 4.0, 0.6, draws=40, **FAST)
    ex = rademacher_details(q, 0, exact=True)
    mc = rademacher_details(q, 0)
    table = {tuple(s): v for s, v in zip(ex.patterns, ex.per_draw)}
    for s, v in zip(mc.patterns, mc.per_draw):
        assert v == table[tuple(s)]
    assert abs(ex.value - mc.value) <= 2 * mc.stderr + 1e-12


def test_zero_radius_and_empty_class(data):
    loss = make_cross_entropy(3)
    assert estimate_rademacher(RademacherQuery(loss, data, 0.0, draws=4, **FAST)) == 0.0
    est = rademacher_details(RademacherQuery(loss, data, 5.0, 1e-6, draws=4, **FAST))
    assert est.empty and est.value == 0.0


def test_seed_determinism(data):
    q = RademacherQuery(make_cross_entropy(3), data, 3.0, 0.8, draws=6, **FAST)
    assert estimate_rademacher(q, 5) == estimate_rademacher(q, 5)


def test_grid_is_monotone(data):
    q = RademacherQuery(make_cross_entropy(3), data, 1.0, draws=8, **FAST)
    g = rademacher_grid(q, [1.0, 4.0, 12.0], [0.3, 0.6, math.inf], seed=1)
    assert g.shape == (3, 3)
    assert np.all(np.diff(g, axis=0) >= 0) and np.all(np.diff(g, axis=1) >= 0)


def test_penalty_mode_runs(data):
    q = RademacherQuery(make_cross_entropy(3), data, 3.0, 0.8, draws=4, mode="penalty", **FAST)
    assert estimate_rademacher(q) >= 0.0


def test_query_validation(data):
    with pytest.raises(ParameterError):
        RademacherQuery(make_cross_entropy(3), data, -1.0)
    with pytest.raises(ParameterError):
        RademacherQuery(make_cross_entropy(3), data, 1.0, mode="adam")
    big = Dataset(data.X[:6], data.y[:6], data.k)
    with pytest.raises(ParameterError):
        rademacher_details(RademacherQuery(make_cross_entropy(3), big, 1.0), exact=True)
