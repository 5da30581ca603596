"""Mini-batch Adam training with best-validation checkpointing, and evaluation."""
from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from ..autodiff import Adam, ModelCheckpoint, backward, mse
from ..config import TrainConfig
from ..exceptions import NumericalError
from ..marketdata.dataset import MarketDataset, SampleBatch
from ..notifications.base import NullNotifier, Notifier, TrainingEvent
from .base import PredictiveModel

logger = logging.getLogger(__name__)

PREDICTION_COLUMNS: tuple[str, ...] = ("date", "stock_id", "horizon", "prediction", "label", "valid")
EVALUATION_CHUNK = 256


@dataclass(slots=True)
class EpochMetric:
    epoch: int
    split: str
    mse: float


@dataclass(slots=True)
class TrainResult:
    checkpoint: ModelCheckpoint
    metrics: list[EpochMetric] = field(default_factory=list)
    best_epoch: int = 0
    best_validation_mse: float = float("nan")
    stopped_early: bool = False


@dataclass(slots=True)
class EvaluationResult:
    """MSE over valid labels plus the per-sample rows it was computed from."""

    mse: float
    count: int
    excluded: int
    predictions: pd.DataFrame


def _check_finite(
    loss: float,
    model: PredictiveModel,
    epoch: int,
    batch_index: int,
    batch: SampleBatch,
    notifier: Notifier,
) -> None:
    if np.isfinite(loss):
        return
    message = f"{model.name}: non-finite loss at epoch {epoch}, batch {batch_index} ({batch.describe()})"
    logger.error(message)
    notifier.send([TrainingEvent(kind="nan-abort", model=model.name, epoch=epoch, message=message)])
    raise NumericalError(message)


def train_steps(
    model: PredictiveModel,
    batch: SampleBatch,
    steps: int,
    learning_rate: float = 0.001,
    clip_norm: float | None = 5.0,
) -> list[float]:
    """Repeated Adam steps on one fixed batch; returns the loss before each step."""

    optimizer = Adam(model.parameters(), learning_rate=learning_rate, clip_norm=clip_norm)
    losses = []
    for step in range(1, steps + 1):
        optimizer.zero_grad()
        loss = mse(model.forward(batch), batch.targets)
        value = loss.item()
        _check_finite(value, model, 1, step, batch, NullNotifier())
        losses.append(value)
        backward(loss)
        optimizer.step()
    return losses


def evaluate(
    model: PredictiveModel,
    dataset: MarketDataset,
    partition: str = "validation",
    mapper: Callable[..., Iterable[np.ndarray]] = map,
) -> EvaluationResult:
    """MSE of scaled-return predictions over ``partition``; invalid labels are excluded and counted."""

    pairs = dataset.samples(partition)
    if len(pairs) == 0:
        raise ValueError(f"no valid samples in the {partition} partition")
    chunks = [pairs[start : start + EVALUATION_CHUNK] for start in range(0, len(pairs), EVALUATION_CHUNK)]
    predictions = np.concatenate(list(mapper(lambda chunk: model.predict(dataset.batch(chunk)), chunks)))
    targets = dataset.scaled[pairs[:, 0], pairs[:, 1]]
    errors = predictions - targets
    score = float(np.mean(errors * errors))

    invalid = dataset.invalid_samples(partition)
    invalid_predictions = (
        np.concatenate(list(mapper(lambda chunk: model.predict(dataset.batch(chunk)), [invalid])))
        if len(invalid)
        else np.empty(0)
    )
    every = np.concatenate([pairs, invalid]) if len(invalid) else pairs
    rows = pd.DataFrame(
        {
            "date": dataset.dates[every[:, 0]],
            "stock_id": [dataset.stock_order[stock] for stock in every[:, 1]],
            "horizon": dataset.horizon,
            "prediction": np.concatenate([predictions, invalid_predictions]),
            "label": np.concatenate([targets, np.full(len(invalid), np.nan)]),
            "valid": np.concatenate([np.ones(len(pairs), dtype=bool), np.zeros(len(invalid), dtype=bool)]),
        }
    )
    rows = rows.sort_values(["date", "stock_id"], kind="mergesort").reset_index(drop=True)
    return EvaluationResult(mse=score, count=len(pairs), excluded=len(invalid), predictions=rows)


def train(
    model: PredictiveModel,
    dataset: MarketDataset,
    config: TrainConfig,
    rng: np.random.Generator,
    notifier: Notifier | None = None,
    metadata: dict[str, Any] | None = None,
    extras: dict[str, np.ndarray] | None = None,
) -> TrainResult:
    """Fit ``model`` on the train partition, keeping the best-validation parameters.

    Gradient models run mini-batch Adam with global-norm clipping and stop
    after ``config.patience`` epochs without a validation improvement.
    Closed-form models are fitted once and reported as a single epoch.
    """

    notifier = notifier or NullNotifier()
    metadata = dict(metadata or {})
    has_validation = len(dataset.samples("validation")) > 0

    if not model.gradient_trained:
        model.fit(dataset)
        metrics = [EpochMetric(1, "train", evaluate(model, dataset, "train").mse)]
        best = float("nan")
        if has_validation:
            best = evaluate(model, dataset, "validation").mse
            metrics.append(EpochMetric(1, "validation", best))
        logger.info("%s fitted: %s", model.name, ", ".join(f"{item.split} mse={item.mse:.6f}" for item in metrics))
        checkpoint = ModelCheckpoint.capture(model.parameters(), extras=extras, metadata=metadata)
        return TrainResult(checkpoint=checkpoint, metrics=metrics, best_epoch=1, best_validation_mse=best)

    if len(dataset.samples("train")) == 0:
        raise ValueError(f"{model.name}: no training samples")
    params = model.parameters()
    optimizer = Adam(params, learning_rate=config.learning_rate, clip_norm=config.clip_norm)
    metrics: list[EpochMetric] = []
    best_checkpoint: ModelCheckpoint | None = None
    best_mse = float("inf")
    best_epoch = 0
    stopped_early = False

    for epoch in range(1, config.epochs + 1):
        squared, count = 0.0, 0
        for batch_index, batch in enumerate(dataset.iter_batches("train", config.batch_size, rng), start=1):
            optimizer.zero_grad()
            loss = mse(model.forward(batch), batch.targets)
            value = loss.item()
            _check_finite(value, model, epoch, batch_index, batch, notifier)
            backward(loss)
            optimizer.step()
            squared += value * batch.size
            count += batch.size
        train_mse = squared / count
        metrics.append(EpochMetric(epoch, "train", train_mse))

        if has_validation:
            score = evaluate(model, dataset, "validation").mse
            metrics.append(EpochMetric(epoch, "validation", score))
            logger.info("%s epoch %s: train mse=%.6f validation mse=%.6f", model.name, epoch, train_mse, score)
        else:
            score = train_mse
            logger.info("%s epoch %s: train mse=%.6f", model.name, epoch, train_mse)

        if not np.isfinite(score):
            message = f"{model.name}: non-finite validation mse at epoch {epoch}"
            notifier.send([TrainingEvent(kind="nan-abort", model=model.name, epoch=epoch, message=message)])
            raise NumericalError(message)
        if score < best_mse:
            best_mse, best_epoch = score, epoch
            best_checkpoint = ModelCheckpoint.capture(
                params, optimizer.state, extras=extras, metadata={**metadata, "epoch": epoch}
            )
            notifier.send(
                [TrainingEvent(kind="new-best", model=model.name, epoch=epoch, message=f"validation mse {score:.6f}")]
            )
        elif epoch - best_epoch >= config.patience:
            stopped_early = True
            logger.warning("%s stopped early at epoch %s (best epoch %s)", model.name, epoch, best_epoch)
            notifier.send(
                [TrainingEvent(kind="early-stop", model=model.name, epoch=epoch, message=f"best epoch {best_epoch}")]
            )
            break

    assert best_checkpoint is not None
    best_checkpoint.restore_into(params)
    return TrainResult(
        checkpoint=best_checkpoint,
        metrics=metrics,
        best_epoch=best_epoch,
        best_validation_mse=best_mse if has_validation else float("nan"),
        stopped_early=stopped_early,
    )
