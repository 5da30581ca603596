from __future__ import annotations

from typing import Iterable

import numpy as np
import pandas as pd
import pytest

from mktcube.autodiff import Tensor, linear
from mktcube.config import BaselineConfig, MAConfig, MARNNConfig, TrainConfig
from mktcube.exceptions import NumericalError
from mktcube.marketdata import DataSplit, MarketDataset, SampleBatch
from mktcube.models import (
    FFNNModel,
    LRModel,
    LSTMRNNModel,
    MAModel,
    MARNNModel,
    PredictiveModel,
    evaluate,
    fit_lr,
    fit_svr,
    predict_lr,
    predict_svr,
    train,
    train_steps,
)
from mktcube.notifications.base import Notifier, TrainingEvent
from mktcube.scheduler.pool import WorkerPool


class RecordingNotifier(Notifier):
    def __init__(self) -> None:
        self.events: list[TrainingEvent] = []

    def send(self, events: Iterable[TrainingEvent]) -> None:
        self.events.extend(list(events))


class ConstantModel(PredictiveModel):
    name = "constant"

    def __init__(self, value: float = 0.0) -> None:
        self.bias = Tensor.parameter(np.array([[value]]))

    def parameters(self) -> dict[str, Tensor]:
        return {"bias": self.bias}

    def forward(self, batch: SampleBatch) -> Tensor:
        return linear(np.ones((batch.size, 1)), self.bias)[:, 0]


class OracleModel(ConstantModel):
    name = "oracle"

    def forward(self, batch: SampleBatch) -> Tensor:
        return Tensor(batch.targets)


def _unit_labels(dates: pd.DatetimeIndex) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {"date": date, "stock_id": stock, "horizon": 1, "raw": 0.01, "scaled": sign, "valid": True}
            for date in dates
            for stock, sign in (("A", 1.0), ("B", -1.0))
        ]
    )


@pytest.fixture
def toy_dataset() -> MarketDataset:
    """Six days, two stocks, labels +1 for A and -1 for B."""

    dates = pd.bdate_range("2021-01-04", periods=6)
    labels = _unit_labels(dates)
    split = DataSplit(train=tuple(dates[:2]), validation=tuple(dates[2:4]), backtest=tuple(dates[4:]))
    return MarketDataset(
        values=np.random.default_rng(0).uniform(size=(6, 2, 1)),
        dates=dates,
        stock_order=("A", "B"),
        indicator_names=("x",),
        labels=labels,
        split=split,
        horizon=1,
        lookback=1,
    )


def test_zero_predictor_on_unit_labels_scores_one(toy_dataset: MarketDataset) -> None:
    result = evaluate(ConstantModel(0.0), toy_dataset, "validation")

    assert result.mse == 1.0
    assert result.count == 4
    assert result.excluded == 0


def test_perfect_predictor_scores_zero(toy_dataset: MarketDataset) -> None:
    assert evaluate(OracleModel(), toy_dataset, "backtest").mse == 0.0


def test_purged_training_day_is_dropped(toy_dataset: MarketDataset) -> None:
    assert toy_dataset.samples("train")[:, 0].tolist() == [0, 0]


def test_prediction_rows_reproduce_the_score(prepared) -> None:
    dataset = prepared.dataset(horizon=5, lookback=4)
    model = FFNNModel(4, 40, np.random.default_rng(0), BaselineConfig(ffnn_hidden=(4, 4)))

    result = evaluate(model, dataset, "validation")

    rows = result.predictions[result.predictions["valid"]]
    recomputed = float(((rows["prediction"] - rows["label"]) ** 2).mean())
    assert recomputed == pytest.approx(result.mse, abs=1e-12)
    assert list(result.predictions.columns) == ["date", "stock_id", "horizon", "prediction", "label", "valid"]


def test_pool_mapper_gives_identical_scores(prepared) -> None:
    dataset = prepared.dataset(horizon=1, lookback=4)
    model = LSTMRNNModel(40, np.random.default_rng(0), BaselineConfig(lstm_cell=3))

    with WorkerPool(3) as pool:
        pooled = evaluate(model, dataset, "train", mapper=pool.map)
    serial = evaluate(model, dataset, "train")

    assert pooled.mse == serial.mse


def test_empty_partition_is_rejected(toy_dataset: MarketDataset) -> None:
    dates = toy_dataset.dates
    no_validation = DataSplit(train=tuple(dates[:4]), validation=(), backtest=tuple(dates[4:]))
    dataset = MarketDataset(
        values=toy_dataset.values,
        dates=dates,
        stock_order=toy_dataset.stock_order,
        indicator_names=toy_dataset.indicator_names,
        labels=_unit_labels(dates),
        split=no_validation,
        horizon=1,
        lookback=1,
    )

    with pytest.raises(ValueError, match="no valid samples"):
        evaluate(ConstantModel(), dataset, "validation")


def test_zero_learning_rate_leaves_parameters_unchanged(prepared) -> None:
    dataset = prepared.dataset(horizon=1, lookback=4)
    model = FFNNModel(4, 40, np.random.default_rng(0), BaselineConfig(ffnn_hidden=(4, 4)))
    before = {name: tensor.data.copy() for name, tensor in model.parameters().items()}

    train(model, dataset, TrainConfig(epochs=1, learning_rate=0.0, lookback=4), np.random.default_rng(1))

    for name, tensor in model.parameters().items():
        np.testing.assert_array_equal(tensor.data, before[name])


def test_same_seed_gives_identical_metric_trace(prepared) -> None:
    dataset = prepared.dataset(horizon=1, lookback=4)
    config = TrainConfig(epochs=2, lookback=4, batch_size=8)

    traces = []
    for _ in range(2):
        model = LSTMRNNModel(40, np.random.default_rng(5), BaselineConfig(lstm_cell=3))
        result = train(model, dataset, config, np.random.default_rng(6))
        traces.append([(item.epoch, item.split, item.mse) for item in result.metrics])

    assert traces[0] == traces[1]
    assert [split for _, split, _ in traces[0]] == ["train", "validation", "train", "validation"]


def test_stalled_validation_stops_early_and_keeps_the_best_epoch(prepared) -> None:
    dataset = prepared.dataset(horizon=1, lookback=4)
    notifier = RecordingNotifier()
    model = FFNNModel(4, 40, np.random.default_rng(0), BaselineConfig(ffnn_hidden=(3, 3)))

    result = train(
        model,
        dataset,
        TrainConfig(epochs=10, patience=2, learning_rate=0.0, lookback=4),
        np.random.default_rng(1),
        notifier=notifier,
        metadata={"model": "ffnn"},
    )

    assert result.stopped_early
    assert result.best_epoch == 1
    assert result.checkpoint.metadata == {"model": "ffnn", "epoch": 1}
    assert [event.kind for event in notifier.events] == ["new-best", "early-stop"]
    assert max(item.epoch for item in result.metrics) == 3


def test_restored_parameters_match_the_best_checkpoint(prepared) -> None:
    dataset = prepared.dataset(horizon=1, lookback=4)
    model = LSTMRNNModel(40, np.random.default_rng(2), BaselineConfig(lstm_cell=3))

    result = train(model, dataset, TrainConfig(epochs=3, lookback=4), np.random.default_rng(3))

    for name, tensor in model.parameters().items():
        np.testing.assert_array_equal(tensor.data, result.checkpoint.params[name])
    validation = [item.mse for item in result.metrics if item.split == "validation"]
    assert result.best_validation_mse == min(validation)


def test_non_finite_loss_aborts_and_names_the_batch(prepared) -> None:
    dataset = prepared.dataset(horizon=1, lookback=4)
    notifier = RecordingNotifier()
    model = ConstantModel(float("nan"))

    with pytest.raises(NumericalError, match="batch 1"):
        train(model, dataset, TrainConfig(epochs=1, lookback=4), np.random.default_rng(0), notifier=notifier)

    assert [event.kind for event in notifier.events] == ["nan-abort"]
    assert "dates" in notifier.events[0].message


def test_closed_form_models_report_one_epoch(prepared) -> None:
    dataset = prepared.dataset(horizon=5, lookback=4)

    result = train(LRModel(4, 40), dataset, TrainConfig(lookback=4), np.random.default_rng(0))

    assert [(item.epoch, item.split) for item in result.metrics] == [(1, "train"), (1, "validation")]
    assert result.best_validation_mse == result.metrics[1].mse
    assert result.checkpoint.optimizer is None


MA_TINY = MAConfig(kernels=6, embedding_size=5, attention_size=4, market_dim=6, head_hidden=5)
MARNN_TINY = MARNNConfig(lstm_cell=4, stock_dim=5, fusion_hidden=(6, 4))
MEMORISERS = {
    "ffnn": lambda rng: FFNNModel(4, 40, rng, BaselineConfig(ffnn_hidden=(8, 8))),
    "lstm-rnn": lambda rng: LSTMRNNModel(40, rng, BaselineConfig(lstm_cell=6)),
    "ma": lambda rng: MAModel(8, 40, 4, rng, MA_TINY),
    "ma-rnn": lambda rng: MARNNModel(8, 40, 4, rng, MA_TINY, MARNN_TINY),
}


@pytest.fixture
def single_sample(prepared) -> SampleBatch:
    dataset = prepared.dataset(horizon=1, lookback=4)
    batch = dataset.batch(dataset.samples("train")[:1])
    batch.targets = np.array([1.5])
    return batch


@pytest.mark.parametrize("name", sorted(MEMORISERS))
def test_single_sample_is_memorised(name: str, single_sample: SampleBatch) -> None:
    model = MEMORISERS[name](np.random.default_rng(0))

    losses = train_steps(model, single_sample, steps=2000, learning_rate=0.01)

    assert losses[0] > 1e-3
    assert min(losses[-100:]) < 1e-4


def test_closed_form_baselines_memorise_a_single_sample(single_sample: SampleBatch) -> None:
    X, y = single_sample.flat_histories(), single_sample.targets

    lr_fit = fit_lr(X, y)
    svr_fit = fit_svr(X, y, epsilon=0.0, steps=5000, learning_rate=0.005)

    assert float(np.mean((predict_lr(lr_fit, X) - y) ** 2)) < 1e-4
    assert float(np.mean((predict_svr(svr_fit, X) - y) ** 2)) < 1e-4

