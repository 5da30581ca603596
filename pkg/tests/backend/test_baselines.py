from __future__ import annotations

import numpy as np
import pytest

from mktcube.config import BaselineConfig
from mktcube.models import LRModel, SVRModel, fit_lr, fit_svr, predict_lr, predict_svr
from mktcube.models.baselines import svr_subgradient


def test_lr_recovers_an_exact_linear_relation() -> None:
    X = np.linspace(-10.0, 10.0, 101).reshape(-1, 1)

    fit = fit_lr(X, 2.0 * X[:, 0])

    assert fit.weights[0] == pytest.approx(2.0, abs=1e-9)
    assert fit.intercept == pytest.approx(0.0, abs=1e-9)


def test_lr_on_constant_target_returns_the_mean() -> None:
    X = np.random.default_rng(0).normal(size=(30, 4))

    fit = fit_lr(X, np.full(30, 0.7))

    np.testing.assert_allclose(fit.weights, 0.0, atol=1e-9)
    assert fit.intercept == pytest.approx(0.7, abs=1e-9)


def test_lr_residual_is_orthogonal_to_the_columns() -> None:
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 6))
    y = X @ rng.uniform(-0.5, 0.5, size=6) + rng.normal(scale=0.3, size=200)

    fit = fit_lr(X, y)
    residual = y - predict_lr(fit, X)

    np.testing.assert_allclose(X.T @ residual, 0.0, atol=1e-8)
    assert abs(residual.sum()) < 1e-8


def test_lr_ridge_handles_duplicated_columns() -> None:
    column = np.arange(10.0)
    X = np.column_stack([column, column])

    fit = fit_lr(X, 3.0 * column)

    np.testing.assert_allclose(predict_lr(fit, X), 3.0 * column, atol=1e-5)


def test_lr_rejects_mismatched_targets() -> None:
    with pytest.raises(ValueError):
        fit_lr(np.zeros((4, 2)), np.zeros(3))


def test_svr_inside_the_tube_only_decays_weights() -> None:
    X = np.array([[1.0], [2.0], [3.0]])
    weights = np.array([0.01])

    grad_w, grad_b = svr_subgradient(weights, 0.0, X, X[:, 0] * 0.01 + 0.05, c=0.3, epsilon=0.1)

    np.testing.assert_allclose(grad_w, weights / (0.3 * 3))
    assert grad_b == 0.0


def test_svr_slope_tracks_least_squares() -> None:
    rng = np.random.default_rng(2)
    X = rng.uniform(-2.0, 2.0, size=(200, 1))
    y = 1.5 * X[:, 0] + rng.normal(scale=0.05, size=200)

    svr = fit_svr(X, y, c=0.3, epsilon=0.1, steps=3000)
    ols = fit_lr(X, y)

    assert svr.weights[0] == pytest.approx(ols.weights[0], rel=0.1)
    np.testing.assert_allclose(predict_svr(svr, X), X @ svr.weights + svr.intercept)


def test_svr_is_deterministic() -> None:
    rng = np.random.default_rng(3)
    X = rng.normal(size=(50, 3))
    y = X[:, 0] - X[:, 2]

    first = fit_svr(X, y, steps=200)
    second = fit_svr(X, y, steps=200)

    assert first.weights.tobytes() == second.weights.tobytes()
    assert first.intercept == second.intercept


def test_linear_models_fit_from_the_dataset(prepared) -> None:
    dataset = prepared.dataset(horizon=1, lookback=4)
    lr = LRModel(4, 40)
    svr = SVRModel(4, 40, BaselineConfig(svr_steps=50))

    lr.fit(dataset)
    svr.fit(dataset)

    X, y = dataset.design_matrix("train")
    expected = fit_lr(X, y)
    np.testing.assert_allclose(lr.weights.data[0], expected.weights)
    batch = dataset.batch(dataset.samples("validation")[:4])
    np.testing.assert_allclose(lr.predict(batch), predict_lr(expected, batch.flat_histories()), rtol=1e-10)
    assert np.isfinite(svr.predict(batch)).all()
    assert not lr.gradient_trained
