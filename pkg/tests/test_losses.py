import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from templategd import (
    DimensionError,
    ExponentialTail,
    PolynomialTail,
    TailConstraintError,
    loss_gradient_logits,
    loss_value,
    make_cross_entropy,
    make_phi_linear_tail,
    make_phi_quadratic_tail,
    make_phi_raw,
    make_sum_univariate,
    make_tail,
    model_loss_gradient,
)
from templategd.losses import (
    d_y_apply,
    d_y_transpose_apply,
    dual_exponent,
    k_factor,
    lp_norm,
)
from templategd.verify import finite_diff_gradient

from conftest import loss_zoo

finite = st.floats(-30, 30, allow_nan=False, allow_infinity=False)


def test_cross_entropy_matches_softmax_formula():
    loss = make_cross_entropy(4)
    z = np.array([0.3, -1.2, 2.0, 0.5])
    expected = -z[2] + math.log(np.exp(z).sum())
    assert loss_value(loss, z, 2) == pytest.approx(expected, rel=1e-13)


def test_cross_entropy_temperature_scales_inside_log():
    alpha = 2.0
    loss = make_cross_entropy(3, alpha)
    z = np.array([1.0, 0.0, -0.5])
    u = z[0] - z[1:]
    assert loss_value(loss, z, 0) == pytest.approx(math.log1p(np.exp(-alpha * u).sum()) / alpha, rel=1e-13)


def test_cross_entropy_large_margins_stay_finite():
    loss = make_cross_entropy(3)
    z = np.array([800.0, -800.0, 0.0])
    assert loss_value(loss, z, 0) == pytest.approx(math.exp(-800.0), abs=1e-300)
    assert loss_value(loss, z, 1) == pytest.approx(1600.0, rel=1e-12)
    g = loss_gradient_logits(loss, z, 1)
    assert np.all(np.isfinite(g))


def test_tiny_margins_keep_relative_precision():
    loss = make_cross_entropy(2)
    val = loss_value(loss, np.array([40.0, 0.0]), 0)
    assert val == pytest.approx(math.exp(-40.0), rel=1e-12)


def test_shipped_constants():
    assert make_cross_entropy(5, 2.0).beta == 4.0
    assert make_cross_entropy(5, 0.5).beta == 0.5
    assert make_cross_entropy(5).p == math.inf
    assert PolynomialTail(0.5).beta == pytest.approx(0.75)
    sq = make_sum_univariate(4, make_phi_quadratic_tail(ExponentialTail()))
    assert sq.p == 2


def test_k_factor_and_dual_exponent():
    assert k_factor(8, math.inf) == pytest.approx(8.0 ** (2 / 8))
    assert k_factor(8, 2.0) == pytest.approx(8.0)
    assert dual_exponent(math.inf) == 1.0
    assert dual_exponent(2.0) == 2.0
    assert lp_norm(np.array([3.0, -4.0]), math.inf) == 4.0


@given(arrays(float, 5, elements=finite), arrays(float, 4, elements=finite), st.integers(0, 4))
def test_d_y_adjoint_identity(v, g, y):
    # <D_y v, g> == <v, D_y^T g>
    lhs = d_y_apply(v, y) @ g
    rhs = v @ d_y_transpose_apply(g, y)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(arrays(float, 4, elements=st.floats(-5, 5)), st.integers(0, 3), st.sampled_from(range(6)))
def test_gradients_match_finite_differences(z, y, which):
    loss = loss_zoo(4)[which]
    g = loss_gradient_logits(loss, z, y)
    fd = finite_diff_gradient(lambda v: loss_value(loss, v, y), z)
    assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(fd)))


@settings(max_examples=40, deadline=None)
@given(arrays(float, 4, elements=st.floats(-20, 20)), st.integers(0, 3), st.sampled_from(range(6)))
def test_losses_nonnegative(z, y, which):
    assert loss_value(loss_zoo(4)[which], z, y) >= 0


def test_model_gradient_is_outer_product(rng):
    loss = make_cross_entropy(3)
    W = rng.normal(size=(3, 5))
    x = rng.normal(size=5)
    x /= 2 * np.linalg.norm(x)
    G = model_loss_gradient(loss, W, x, 1)
    np.testing.assert_allclose(G, np.outer(loss_gradient_logits(loss, W @ x, 1), x), rtol=1e-14)


def test_tail_inverses_round_trip():
    for tail in (ExponentialTail(1.0), ExponentialTail(0.5), PolynomialTail(0.5), PolynomialTail(1.0)):
        for eps in (1e-6, 1e-3, 0.1, 0.5):
            x = tail.rho_inverse(eps)
            assert float(tail.rho(x)) == pytest.approx(eps, rel=1e-9)


def test_rejects_bad_parameters():
    with pytest.raises(DimensionError):
        make_cross_entropy(1)
    with pytest.raises(TailConstraintError):
        PolynomialTail(2.0)
    with pytest.raises(ValueError):
        make_tail("gaussian")
    with pytest.raises(IndexError):
        loss_value(make_cross_entropy(3), np.zeros(3), 3)


def test_raw_phi_is_the_analytic_tail():
    phi = make_phi_raw(ExponentialTail())
    assert phi(-1.0) == pytest.approx(math.e)
    assert make_phi_quadratic_tail(ExponentialTail())(-1.0) == pytest.approx(2.5)


# worked examples, written with zero-based labels (label 1 of a 1-based listing is 0 here)


def test_d_y_examples():
    np.testing.assert_array_equal(d_y_apply(np.array([5.0, 2.0, 1.0]), 0), [3.0, 4.0])
    np.testing.assert_array_equal(d_y_apply(np.array([1.0, 2.0, 3.0]), 1), [1.0, -1.0])
    np.testing.assert_array_equal(d_y_apply(np.array([0.7, 0.7]), 1), [0.0])
    np.testing.assert_allclose(d_y_transpose_apply(np.array([-1 / 3, -1 / 3]), 0), [-2 / 3, 1 / 3, 1 / 3])
    np.testing.assert_array_equal(d_y_transpose_apply(np.array([2.5]), 0), [2.5, -2.5])


def test_adjoint_identity_batch(rng):
    v = rng.normal(size=(100, 6))
    g = rng.normal(size=(100, 5))
    y = rng.integers(6, size=100)
    lhs = np.einsum("ij,ij->i", d_y_apply(v, y), g)
    rhs = np.einsum("ij,ij->i", v, d_y_transpose_apply(g, y))
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)


def test_loss_examples():
    ce3 = make_cross_entropy(3)
    assert loss_value(ce3, np.zeros(3), 0) == pytest.approx(math.log(3))
    np.testing.assert_allclose(ce3.template.gradient(np.zeros(2)), [-1 / 3, -1 / 3])
    np.testing.assert_allclose(loss_gradient_logits(ce3, np.zeros(3), 0), [-2 / 3, 1 / 3, 1 / 3])
    ce2 = make_cross_entropy(2)
    assert loss_value(ce2, np.array([10.0, 0.0]), 0) == pytest.approx(math.log1p(math.exp(-10)), rel=1e-14)
    raw3 = make_sum_univariate(3, make_phi_raw(ExponentialTail()))
    assert loss_value(raw3, np.zeros(3), 0) == pytest.approx(2.0)
    np.testing.assert_allclose(raw3.template.gradient(np.zeros(2)), [-1.0, -1.0])
    raw2 = make_sum_univariate(2, make_phi_raw(ExponentialTail()))
    np.testing.assert_allclose(loss_gradient_logits(raw2, np.zeros(2), 0), [-1.0, 1.0])
    assert loss_value(raw2, np.array([0.8, 0.0]), 0) == pytest.approx(math.exp(-0.8))


def test_phi_examples():
    quad = make_phi_quadratic_tail(ExponentialTail())
    lin = make_phi_linear_tail(ExponentialTail())
    assert quad(0.0) == 1.0
    assert lin(-2.0) == pytest.approx(3.0)
    xs = np.arange(-5, 5.0001, 0.01)
    assert np.all(np.diff(quad(xs), 2) >= -1e-12)
    assert np.all(lin(xs[xs < 0]) >= -xs[xs < 0])
    assert np.all(np.abs(np.diff(lin(xs)) / 0.01) <= 1 + 1e-9)
    h = 1e-7
    assert (quad(h) - quad(0.0)) / h == pytest.approx(-1.0, abs=1e-6)
    assert (quad(0.0) - quad(-h)) / h == pytest.approx(-1.0, abs=1e-6)


def test_tail_inverse_examples():
    assert make_tail("exponential", 1.0).rho_inverse(0.001) == pytest.approx(math.log(1000), rel=1e-12)
    assert make_tail("polynomial", 1.0).rho_inverse(0.01) == pytest.approx(99.0, rel=1e-12)


def test_model_gradient_examples():
    ce2 = make_cross_entropy(2)
    G = model_loss_gradient(ce2, np.zeros((2, 2)), np.array([1.0, 0.0]), 0)
    np.testing.assert_allclose(G, [[-0.5, 0.0], [0.5, 0.0]])
    assert not model_loss_gradient(ce2, np.ones((2, 3)), np.zeros(3), 1).any()


def test_gradient_vanishes_along_margin_ray():
    for loss in loss_zoo(3):
        g = loss_gradient_logits(loss, np.array([1e8, 0.0, 0.0]), 0)
        assert np.linalg.norm(g) < 1e-9
