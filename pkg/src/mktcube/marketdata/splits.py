"""Chronological train / validation / backtest partitions."""
from __future__ import annotations

from collections.abc import Sequence

import pandas as pd

from ..config import DEFAULT_TRAIN_FRACTION, DEFAULT_VALIDATION_FRACTION, SplitConfig
from ..exceptions import ConfigError
from .types import DataSplit


def split_dates(
    dates: Sequence[pd.Timestamp] | pd.DatetimeIndex,
    train_end: pd.Timestamp | str | None = None,
    validation_end: pd.Timestamp | str | None = None,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    validation_fraction: float = DEFAULT_VALIDATION_FRACTION,
) -> DataSplit:
    """Partition ``dates`` chronologically.

    ``train_end`` and ``validation_end`` are the first dates of the
    validation and backtest partitions, so a boundary day always lands in
    the later partition. Without explicit boundaries the day counts follow
    the fractions, rounded.
    """

    ordered = pd.DatetimeIndex(sorted(set(pd.DatetimeIndex(dates))))
    total = len(ordered)
    if (train_end is None) != (validation_end is None):
        raise ConfigError("split.train_end", "set both train_end and validation_end or neither")

    if train_end is not None and validation_end is not None:
        first_validation = pd.Timestamp(train_end)
        first_backtest = pd.Timestamp(validation_end)
        if first_backtest <= first_validation:
            raise ConfigError(
                "split.validation_end",
                f"backtest start {first_backtest.date()} must come after validation start {first_validation.date()}",
            )
        n_train = int(ordered.searchsorted(first_validation, side="left"))
        n_before_backtest = int(ordered.searchsorted(first_backtest, side="left"))
    else:
        n_train = int(round(total * train_fraction))
        n_before_backtest = n_train + int(round(total * validation_fraction))
        if n_before_backtest > total:
            raise ConfigError("split.validation_fraction", "train and validation fractions exceed the calendar")

    days = tuple(ordered)
    return DataSplit(
        train=days[:n_train],
        validation=days[n_train:n_before_backtest],
        backtest=days[n_before_backtest:],
    )


def split_from_config(dates: Sequence[pd.Timestamp] | pd.DatetimeIndex, config: SplitConfig) -> DataSplit:
    return split_dates(
        dates,
        train_end=config.train_end or None,
        validation_end=config.validation_end or None,
        train_fraction=config.train_fraction,
        validation_fraction=config.validation_fraction,
    )
