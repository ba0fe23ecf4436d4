import numpy as np
import pytest

from templategd import (
    Dataset,
    GDConfig,
    NumericError,
    ParameterError,
    ShapeError,
    default_step_size,
    empirical_risk,
    gd_run,
    make_cross_entropy,
    make_phi_quadratic_tail,
    make_sum_univariate,
    ExponentialTail,
)
from templategd.trainer import risk_and_gradient
from templategd.verify import finite_diff_gradient


def test_default_step_size_formula():
    assert default_step_size(1.0, 4, 2.0) == pytest.approx(1 / (6 * 4))
    assert default_step_size(1.0, 4, np.inf) == pytest.approx(1 / (6 * 4 ** 0.5))


def test_risk_gradient_matches_finite_differences(small_dataset):
    loss = make_cross_entropy(3)
    W0 = np.random.default_rng(0).normal(size=(3, small_dataset.d))
    _, G = risk_and_gradient(loss, W0, small_dataset.X, small_dataset.y)
    fd = finite_diff_gradient(lambda W: empirical_risk(loss, W, small_dataset), W0)
    np.testing.assert_allclose(G, fd, atol=1e-7)


def test_gd_starts_at_zero_and_counts_updates(small_dataset):
    loss = make_cross_entropy(3)
    cfg = GDConfig(default_step_size(loss.beta, 3, loss.p), 1)
    trace = gd_run(loss, small_dataset, cfg)
    assert trace.t.tolist() == [1]
    assert trace.final_W.sum() == 0.0
    assert trace.final_risk == pytest.approx(np.log(3.0))


def test_gd_matches_hand_rolled_loop(small_dataset):
    loss = make_sum_univariate(3, make_phi_quadratic_tail(ExponentialTail()))
    eta = default_step_size(loss.beta, 3, loss.p)
    T = 25
    trace = gd_run(loss, small_dataset, GDConfig(eta, T, record_every=5))
    W = np.zeros((3, small_dataset.d))
    for _ in range(T - 1):
        W = W - eta * risk_and_gradient(loss, W, small_dataset.X, small_dataset.y)[1]
    np.testing.assert_allclose(trace.final_W, W, rtol=1e-12, atol=1e-14)
    assert trace.t.tolist() == [1, 6, 11, 16, 21, 25]


def test_risk_is_monotone_at_default_step(small_dataset):
    loss = make_cross_entropy(3)
    trace = gd_run(loss, small_dataset, GDConfig(default_step_size(loss.beta, 3, loss.p), 300))
    assert np.all(np.diff(trace.emp_risk) <= 1e-15)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_iteration(small_dataset):
    loss = make_sum_univariate(3, make_phi_quadratic_tail(ExponentialTail()))
    with pytest.raises(NumericError) as err:
        gd_run(loss, small_dataset, GDConfig(1e6, 500))
    assert err.value.t is not None and err.value.t > 1


def test_config_and_shape_validation(small_dataset):
    with pytest.raises(ParameterError):
        GDConfig(0.0, 10)
    with pytest.raises(ParameterError):
        GDConfig(0.1, 0)
    with pytest.raises(ShapeError):
        gd_run(make_cross_entropy(4), small_dataset, GDConfig(0.1, 3))
    with pytest.raises(ShapeError):
        Dataset(np.zeros((3, 2)), np.zeros(2, dtype=int), 2)


def test_compressed_weights_sum_to_one(small_dataset):
    X, y, w = small_dataset.compressed()
    assert w.sum() == pytest.approx(1.0)
    assert len(X) == len(y) <= small_dataset.n


def test_trace_csv(tmp_path, small_dataset):
    loss = make_cross_entropy(3)
    trace = gd_run(loss, small_dataset, GDConfig(0.1, 10, record_every=3))
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,frob_norm,empirical_risk"
    assert len(lines) == 1 + len(trace.t)
