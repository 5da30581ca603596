"""Normalised market images and labels arranged into training samples."""
from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..config import ExperimentConfig
from .images import build_images, compute_panel, fit_norm, normalise, stock_order
from .indicators import indicator_names
from .labels import build_label_panel
from .splits import split_from_config
from .types import DataSplit, MarketCube, MarketImage, NormStats, StockSeries

logger = logging.getLogger(__name__)

PARTITIONS: tuple[str, ...] = ("train", "validation", "backtest")


@dataclass(slots=True)
class SampleBatch:
    """A mini-batch of (cube, target stock, label) samples."""

    cubes: np.ndarray
    """(batch, t, m, n) normalised market cubes."""

    stock_index: np.ndarray
    histories: np.ndarray
    """(batch, t, n) rows of the target stock inside each cube."""

    targets: np.ndarray
    raw: np.ndarray
    dates: tuple[pd.Timestamp, ...]
    stock_ids: tuple[str, ...]

    @property
    def size(self) -> int:
        return int(self.targets.shape[0])

    def flat_histories(self) -> np.ndarray:
        return self.histories.reshape(self.size, -1)

    def describe(self) -> str:
        first, last = min(self.dates), max(self.dates)
        return f"dates {first.date()}..{last.date()}, stocks {sorted(set(self.stock_ids))}"


class MarketDataset:
    """Samples for one horizon: every (day, stock) with a full cube and a valid label."""

    def __init__(
        self,
        values: np.ndarray,
        dates: pd.DatetimeIndex,
        stock_order: tuple[str, ...],
        indicator_names: tuple[str, ...],
        labels: pd.DataFrame,
        split: DataSplit,
        horizon: int,
        lookback: int,
        calendar: pd.DatetimeIndex | None = None,
    ) -> None:
        if values.shape != (len(dates), len(stock_order), len(indicator_names)):
            raise ValueError(f"values {values.shape} do not match the dataset header")
        if lookback <= 0:
            raise ValueError("lookback must be positive")
        self.values = values
        self.dates = pd.DatetimeIndex(dates)
        self.stock_order = stock_order
        self.indicator_names = indicator_names
        self.split = split
        self.horizon = horizon
        self.lookback = lookback
        self.calendar = pd.DatetimeIndex(calendar) if calendar is not None else self.dates

        selected = labels[labels["horizon"] == horizon]
        shape = (len(self.dates), len(stock_order))
        self.scaled = self._pivot(selected, "scaled", shape)
        self.raw = self._pivot(selected, "raw", shape)
        self.valid = self._pivot(selected, "valid", shape) == 1.0

        self._samples: dict[str, np.ndarray] = {}
        self._invalid: dict[str, np.ndarray] = {}
        self._index_samples()

    def _pivot(self, labels: pd.DataFrame, column: str, shape: tuple[int, int]) -> np.ndarray:
        if labels.empty:
            return np.full(shape, np.nan)
        table = labels.pivot(index="date", columns="stock_id", values=column).astype(float)
        table = table.reindex(index=self.dates, columns=list(self.stock_order))
        return table.to_numpy(dtype=np.float64)

    def _index_samples(self) -> None:
        positions = self.calendar.get_indexer(self.dates)
        if (positions < 0).any():
            raise ValueError("dataset dates must belong to the calendar")
        first_validation = self.split.validation[0] if self.split.validation else None
        validation_start = (
            int(self.calendar.searchsorted(first_validation)) if first_validation is not None else len(self.calendar)
        )
        buckets: dict[str, list[tuple[int, int]]] = {name: [] for name in PARTITIONS}
        invalid: dict[str, list[tuple[int, int]]] = {name: [] for name in PARTITIONS}
        purged = 0
        for day in range(self.lookback - 1, len(self.dates)):
            if positions[day] - positions[day - self.lookback + 1] != self.lookback - 1:
                continue
            partition = self.split.partition_of(self.dates[day])
            for stock in range(len(self.stock_order)):
                if np.isnan(self.raw[day, stock]):
                    continue
                if not self.valid[day, stock]:
                    invalid[partition].append((day, stock))
                    continue
                if partition == "train" and positions[day] + self.horizon >= validation_start:
                    purged += 1
                    continue
                buckets[partition].append((day, stock))
        self._samples = {name: np.array(pairs, dtype=np.int64).reshape(-1, 2) for name, pairs in buckets.items()}
        self._invalid = {name: np.array(pairs, dtype=np.int64).reshape(-1, 2) for name, pairs in invalid.items()}
        logger.debug(
            "Horizon %s samples: %s, excluded %s, purged %s",
            self.horizon,
            {name: len(pairs) for name, pairs in self._samples.items()},
            {name: len(pairs) for name, pairs in invalid.items()},
            purged,
        )

    @property
    def m(self) -> int:
        return len(self.stock_order)

    @property
    def n(self) -> int:
        return len(self.indicator_names)

    def samples(self, partition: str) -> np.ndarray:
        if partition not in self._samples:
            raise KeyError(f"Unknown partition: {partition}")
        return self._samples[partition]

    def excluded(self, partition: str) -> int:
        """Samples dropped from ``partition`` because their label is invalid."""

        return len(self.invalid_samples(partition))

    def invalid_samples(self, partition: str) -> np.ndarray:
        if partition not in self._invalid:
            raise KeyError(f"Unknown partition: {partition}")
        return self._invalid[partition]

    def cube(self, day: int) -> MarketCube:
        start = day - self.lookback + 1
        return MarketCube(
            dates=tuple(self.dates[start : day + 1]),
            stock_order=self.stock_order,
            indicator_names=self.indicator_names,
            values=self.values[start : day + 1],
        )

    def batch(self, pairs: np.ndarray) -> SampleBatch:
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        days, stocks = pairs[:, 0], pairs[:, 1]
        offsets = np.arange(-self.lookback + 1, 1)
        cubes = self.values[days[:, None] + offsets[None, :]]
        histories = cubes[np.arange(len(pairs)), :, stocks, :]
        return SampleBatch(
            cubes=cubes,
            stock_index=stocks,
            histories=histories,
            targets=self.scaled[days, stocks],
            raw=self.raw[days, stocks],
            dates=tuple(self.dates[days]),
            stock_ids=tuple(self.stock_order[stock] for stock in stocks),
        )

    def iter_batches(
        self,
        partition: str,
        batch_size: int,
        rng: np.random.Generator | None = None,
    ) -> Iterator[SampleBatch]:
        """Mini-batches over ``partition``; shuffled when ``rng`` is given."""

        pairs = self.samples(partition)
        order = rng.permutation(len(pairs)) if rng is not None else np.arange(len(pairs))
        for start in range(0, len(order), batch_size):
            yield self.batch(pairs[order[start : start + batch_size]])

    def design_matrix(self, partition: str) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (t * n) stock histories and scaled labels for closed-form fits."""

        batch = self.batch(self.samples(partition))
        return batch.flat_histories(), batch.targets


@dataclass(slots=True)
class PreparedMarket:
    """Everything derived from the raw series that every model shares."""

    raw_images: list[MarketImage]
    norm_stats: NormStats
    values: np.ndarray
    dates: pd.DatetimeIndex
    stock_order: tuple[str, ...]
    indicator_names: tuple[str, ...]
    split: DataSplit
    labels: pd.DataFrame
    calendar: pd.DatetimeIndex

    def normalised_images(self, partition: str | None = None) -> list[MarketImage]:
        wanted = set(self.split.partition(partition)) if partition else None
        return [
            MarketImage(date=date, stock_order=self.stock_order, values=self.values[index], indicator_names=self.indicator_names)
            for index, date in enumerate(self.dates)
            if wanted is None or date in wanted
        ]

    def dataset(self, horizon: int, lookback: int) -> MarketDataset:
        return MarketDataset(
            values=self.values,
            dates=self.dates,
            stock_order=self.stock_order,
            indicator_names=self.indicator_names,
            labels=self.labels,
            split=self.split,
            horizon=horizon,
            lookback=lookback,
            calendar=self.calendar,
        )


def prepare_market(
    series: Sequence[StockSeries],
    config: ExperimentConfig,
    mapper: Callable[..., Iterable[pd.DataFrame]] = map,
) -> PreparedMarket:
    """Indicators, raw images, train-only normalisation, split and labels."""

    if not series:
        raise ValueError("prepare_market needs at least one stock series")
    panel = compute_panel(series, config.indicators, config.data.fill_mode, mapper=mapper)
    raw_images = build_images(series, config.indicators, config.data.fill_mode, panel=panel)
    if not raw_images:
        raise ValueError("no date has a complete market image; the history is shorter than the warm-up")
    dates = pd.DatetimeIndex([image.date for image in raw_images])
    split = split_from_config(dates, config.split)
    train = set(split.train)
    stats = fit_norm([image for image in raw_images if image.date in train])
    values = normalise(np.stack([image.values for image in raw_images]), stats)
    calendar = pd.DatetimeIndex(sorted(set().union(*(set(item.dates) for item in series))))
    labels = build_label_panel(series, config.labels.horizons, config.labels.sigma_window, config.labels.sigma_floor)
    logger.info(
        "Prepared %s images: train %s, validation %s, backtest %s days",
        len(raw_images),
        len(split.train),
        len(split.validation),
        len(split.backtest),
    )
    return PreparedMarket(
        raw_images=raw_images,
        norm_stats=stats,
        values=values,
        dates=dates,
        stock_order=stock_order(series),
        indicator_names=indicator_names(config.indicators),
        split=split,
        labels=labels,
        calendar=calendar,
    )
