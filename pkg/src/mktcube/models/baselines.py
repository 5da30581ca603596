"""Market-free baselines: LR, linear SVR, FFNN and LSTM-RNN."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..autodiff import Tensor, linear, lstm_sequence, sigmoid
from ..config import BaselineConfig
from ..marketdata.dataset import MarketDataset, SampleBatch
from .base import PredictiveModel, uniform

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class LinearFit:
    weights: np.ndarray
    intercept: float


def fit_lr(X: np.ndarray, y: np.ndarray, ridge: float = 1e-8) -> LinearFit:
    """Least squares with an intercept via the ridge-stabilised normal equations."""

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"design matrix {X.shape} does not match {y.shape[0]} targets")
    augmented = np.hstack([X, np.ones((X.shape[0], 1))])
    gram = augmented.T @ augmented + ridge * np.eye(augmented.shape[1])
    solution = np.linalg.solve(gram, augmented.T @ y)
    return LinearFit(weights=solution[:-1], intercept=float(solution[-1]))


def predict_lr(fit: LinearFit, X: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=np.float64) @ fit.weights + fit.intercept


def svr_subgradient(
    weights: np.ndarray,
    intercept: float,
    X: np.ndarray,
    y: np.ndarray,
    c: float = 0.3,
    epsilon: float = 0.1,
) -> tuple[np.ndarray, float]:
    """Subgradient of ||w||^2 / (2 c N) + mean(max(0, |y - Xw - b| - epsilon))."""

    count = X.shape[0]
    residual = y - (X @ weights + intercept)
    outside = np.where(np.abs(residual) > epsilon, -np.sign(residual), 0.0)
    grad_w = weights / (c * count) + X.T @ outside / count
    grad_b = float(outside.mean())
    return grad_w, grad_b


def fit_svr(
    X: np.ndarray,
    y: np.ndarray,
    c: float = 0.3,
    epsilon: float = 0.1,
    steps: int = 3000,
    learning_rate: float = 0.5,
) -> LinearFit:
    """Linear epsilon-insensitive regression by deterministic full-batch subgradient descent.

    Step sizes decay as ``learning_rate / sqrt(step)``; the returned model
    averages the iterates of the second half of the run.
    """

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    weights = np.zeros(X.shape[1])
    intercept = 0.0
    average_w = np.zeros_like(weights)
    average_b = 0.0
    averaged = 0
    for step in range(1, steps + 1):
        grad_w, grad_b = svr_subgradient(weights, intercept, X, y, c, epsilon)
        rate = learning_rate / np.sqrt(step)
        weights = weights - rate * grad_w
        intercept = intercept - rate * grad_b
        if step > steps // 2:
            averaged += 1
            average_w += (weights - average_w) / averaged
            average_b += (intercept - average_b) / averaged
    if averaged == 0:
        return LinearFit(weights=weights, intercept=intercept)
    return LinearFit(weights=average_w, intercept=average_b)


def predict_svr(fit: LinearFit, X: np.ndarray) -> np.ndarray:
    return predict_lr(fit, X)


class _LinearModel(PredictiveModel):
    gradient_trained = False

    def __init__(self, t: int, n: int, config: BaselineConfig | None = None) -> None:
        self.config = config or BaselineConfig()
        self.weights = Tensor.parameter(np.zeros((1, t * n)), name="weights")
        self.intercept = Tensor.parameter(np.zeros(1), name="intercept")

    def parameters(self) -> dict[str, Tensor]:
        return {"weights": self.weights, "intercept": self.intercept}

    def forward(self, batch: SampleBatch) -> Tensor:
        return linear(batch.flat_histories(), self.weights, self.intercept)[:, 0]

    def _solve(self, X: np.ndarray, y: np.ndarray) -> LinearFit:
        raise NotImplementedError

    def fit(self, dataset: MarketDataset) -> None:
        X, y = dataset.design_matrix("train")
        if X.shape[0] == 0:
            raise ValueError(f"{self.name}: no training samples")
        solution = self._solve(X, y)
        self.weights.data = solution.weights.reshape(1, -1).copy()
        self.intercept.data = np.array([solution.intercept])
        logger.info("Fitted %s on %s samples", self.name, X.shape[0])


class LRModel(_LinearModel):
    name = "lr"

    def _solve(self, X: np.ndarray, y: np.ndarray) -> LinearFit:
        return fit_lr(X, y, self.config.ridge)

    def hyperparameters(self) -> dict[str, Any]:
        return {"baselines.ridge": self.config.ridge}


class SVRModel(_LinearModel):
    name = "svr"

    def _solve(self, X: np.ndarray, y: np.ndarray) -> LinearFit:
        cfg = self.config
        return fit_svr(X, y, cfg.svr_c, cfg.svr_epsilon, cfg.svr_steps, cfg.svr_learning_rate)

    def hyperparameters(self) -> dict[str, Any]:
        cfg = self.config
        return {
            "baselines.svr_c": cfg.svr_c,
            "baselines.svr_epsilon": cfg.svr_epsilon,
            "baselines.svr_steps": cfg.svr_steps,
            "baselines.svr_learning_rate": cfg.svr_learning_rate,
        }


class FFNNModel(PredictiveModel):
    """Two sigmoid hidden layers over the flattened stock history."""

    name = "ffnn"

    def __init__(
        self,
        t: int,
        n: int,
        rng: np.random.Generator,
        config: BaselineConfig | None = None,
        init_scale: float = 0.1,
    ) -> None:
        self.config = config or BaselineConfig()
        sizes = (t * n, *self.config.ffnn_hidden, 1)
        self.layers: list[tuple[Tensor, Tensor]] = [
            (
                Tensor.parameter(uniform(rng, (fan_out, fan_in), init_scale)),
                Tensor.parameter(uniform(rng, (fan_out,), init_scale)),
            )
            for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
        ]

    def parameters(self) -> dict[str, Tensor]:
        named = {}
        for index, (weight, bias) in enumerate(self.layers):
            named[f"layer{index}.weight"] = weight
            named[f"layer{index}.bias"] = bias
        return named

    def forward(self, batch: SampleBatch) -> Tensor:
        hidden: Tensor | np.ndarray = batch.flat_histories()
        for weight, bias in self.layers[:-1]:
            hidden = sigmoid(linear(hidden, weight, bias))
        weight, bias = self.layers[-1]
        return linear(hidden, weight, bias)[:, 0]

    def hyperparameters(self) -> dict[str, Any]:
        return {"baselines.ffnn_hidden": list(self.config.ffnn_hidden)}


class LSTMRNNModel(PredictiveModel):
    """LSTM over the stock's own indicator rows, linear read-out of the last state."""

    name = "lstm-rnn"

    def __init__(
        self,
        n: int,
        rng: np.random.Generator,
        config: BaselineConfig | None = None,
        init_scale: float = 0.1,
    ) -> None:
        self.config = config or BaselineConfig()
        cell = self.config.lstm_cell
        self.lstm_weight = Tensor.parameter(uniform(rng, (4 * cell, cell + n), init_scale))
        self.out_weight = Tensor.parameter(uniform(rng, (1, cell), init_scale))
        self.out_bias = Tensor.parameter(uniform(rng, (1,), init_scale))

    def parameters(self) -> dict[str, Tensor]:
        return {"lstm_weight": self.lstm_weight, "out_weight": self.out_weight, "out_bias": self.out_bias}

    def forward(self, batch: SampleBatch) -> Tensor:
        state = lstm_sequence(Tensor(batch.histories), self.lstm_weight)
        return linear(state.h, self.out_weight, self.out_bias)[:, 0]

    def hyperparameters(self) -> dict[str, Any]:
        return {"baselines.lstm_cell": self.config.lstm_cell}
