"""Domain types shared by the market data pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

PRICE_COLUMNS: tuple[str, ...] = ("open", "high", "low", "close", "volume")
FUNDAMENTAL_COLUMNS: tuple[str, ...] = (
    "eps",
    "cur_ratio",
    "debt_to_equity",
    "fncl_lvgr",
    "return_tot_eqy",
    "pe_ratio",
    "short_int_ratio",
)


@dataclass(slots=True)
class StockSeries:
    """Daily OHLCV history of one stock plus its sparse fundamental observations.

    ``prices`` is indexed by trading date with the ``PRICE_COLUMNS``;
    ``fundamentals`` is indexed by observation date with ``FUNDAMENTAL_COLUMNS``.
    """

    stock_id: str
    sector_id: int
    subsector_id: int
    prices: pd.DataFrame
    fundamentals: pd.DataFrame = field(
        default_factory=lambda: pd.DataFrame(columns=list(FUNDAMENTAL_COLUMNS), dtype=float)
    )

    @property
    def dates(self) -> pd.DatetimeIndex:
        return pd.DatetimeIndex(self.prices.index)

    @property
    def close(self) -> pd.Series:
        return self.prices["close"]

    @property
    def sort_key(self) -> tuple[int, int, str]:
        return (self.sector_id, self.subsector_id, self.stock_id)

    def validate(self) -> None:
        """Raise ``ValueError`` when the price bars or dates are inconsistent."""

        missing = [column for column in PRICE_COLUMNS if column not in self.prices.columns]
        if missing:
            raise ValueError(f"{self.stock_id}: price columns missing {missing}")
        if not self.dates.is_monotonic_increasing or not self.dates.is_unique:
            raise ValueError(f"{self.stock_id}: dates must be strictly increasing")
        frame = self.prices
        body_low = np.minimum(frame["open"], frame["close"])
        body_high = np.maximum(frame["open"], frame["close"])
        broken = (frame["low"] > body_low) | (frame["high"] < body_high) | (frame["close"] <= 0)
        if bool(broken.any()):
            first = frame.index[broken.to_numpy()][0]
            raise ValueError(f"{self.stock_id}: inconsistent OHLC bar on {pd.Timestamp(first).date()}")
        if bool((frame["volume"] < 0).any()):
            raise ValueError(f"{self.stock_id}: negative volume")


@dataclass(slots=True)
class MarketImage:
    """One trading day's m x n indicator matrix, rows in sector order."""

    date: pd.Timestamp
    stock_order: tuple[str, ...]
    values: np.ndarray
    indicator_names: tuple[str, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.stock_order), len(self.indicator_names))


@dataclass(slots=True)
class MarketCube:
    """``t`` consecutive market images sharing one stock order."""

    dates: tuple[pd.Timestamp, ...]
    stock_order: tuple[str, ...]
    indicator_names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        expected = (len(self.dates), len(self.stock_order), len(self.indicator_names))
        if self.values.shape != expected:
            raise ValueError(f"cube values {self.values.shape} do not match header {expected}")
        if any(later <= earlier for earlier, later in zip(self.dates, self.dates[1:])):
            raise ValueError("cube dates must be strictly increasing")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape  # type: ignore[return-value]

    @classmethod
    def from_images(cls, images: list[MarketImage]) -> MarketCube:
        if not images:
            raise ValueError("a market cube needs at least one image")
        order = images[0].stock_order
        names = images[0].indicator_names
        for image in images[1:]:
            if image.stock_order != order or image.indicator_names != names:
                raise ValueError(f"image for {image.date.date()} does not share the cube layout")
        return cls(
            dates=tuple(image.date for image in images),
            stock_order=order,
            indicator_names=names,
            values=np.stack([image.values for image in images]),
        )

    def image(self, index: int) -> MarketImage:
        return MarketImage(
            date=self.dates[index],
            stock_order=self.stock_order,
            values=self.values[index],
            indicator_names=self.indicator_names,
        )


@dataclass(slots=True)
class NormStats:
    """Per-indicator min and max over the training period."""

    indicator_names: tuple[str, ...]
    minimum: np.ndarray
    maximum: np.ndarray
    degenerate: tuple[str, ...] = ()
    """Columns whose training range is empty; they normalise to 0.0."""

    fitted_dates: tuple[pd.Timestamp, ...] = ()
    """Every date read while fitting."""


@dataclass(slots=True)
class LabelEntry:
    """Forward return of one stock from ``date`` over ``horizon`` trading days."""

    date: pd.Timestamp
    stock_id: str
    horizon: int
    raw: float
    scaled: float
    sigma: float
    valid: bool


@dataclass(slots=True)
class DataSplit:
    """Disjoint, chronologically ordered date partitions."""

    train: tuple[pd.Timestamp, ...]
    validation: tuple[pd.Timestamp, ...]
    backtest: tuple[pd.Timestamp, ...]

    def partition(self, name: str) -> tuple[pd.Timestamp, ...]:
        if name not in {"train", "validation", "backtest"}:
            raise KeyError(f"Unknown partition: {name}")
        return getattr(self, name)

    def partition_of(self, date: pd.Timestamp) -> str:
        if self.validation and date >= self.validation[0]:
            return "validation" if not self.backtest or date < self.backtest[0] else "backtest"
        if self.backtest and date >= self.backtest[0]:
            return "backtest"
        return "train"
