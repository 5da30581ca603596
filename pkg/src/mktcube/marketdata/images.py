"""Assemble sector-ordered market images and min-max normalise them."""
from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from ..config import IndicatorConfig
from .indicators import FillMode, compute_indicators, indicator_names
from .types import MarketImage, NormStats, StockSeries

logger = logging.getLogger(__name__)

IndicatorPanel = Mapping[str, pd.DataFrame]


def stock_order(series: Iterable[StockSeries]) -> tuple[str, ...]:
    """Stock ids grouped by sector, then subsector, then id."""

    return tuple(item.stock_id for item in sorted(series, key=lambda item: item.sort_key))


def compute_panel(
    series: Sequence[StockSeries],
    config: IndicatorConfig | None = None,
    fill_mode: FillMode = "carry-forward",
    mapper: Callable[..., Iterable[pd.DataFrame]] = map,
) -> dict[str, pd.DataFrame]:
    """Indicator frames for every stock; ``mapper`` may fan out across threads."""

    frames = mapper(lambda item: compute_indicators(item, config, fill_mode), series)
    return {item.stock_id: frame for item, frame in zip(series, frames)}


def build_image(
    series: Sequence[StockSeries],
    date: pd.Timestamp | str,
    indicator_order: Sequence[str] | None = None,
    panel: IndicatorPanel | None = None,
) -> MarketImage:
    """Raw (un-normalised) market image for ``date``.

    Raises ``KeyError`` for a date outside the calendar and ``ValueError``
    naming the first stock without a full indicator row.
    """

    date = pd.Timestamp(date)
    if panel is None:
        panel = {item.stock_id: compute_indicators(item) for item in series}
    order = stock_order(series)
    names = tuple(indicator_order) if indicator_order is not None else indicator_names()
    if not any(date in panel[stock_id].index for stock_id in order):
        raise KeyError(f"Unknown date: {date.date()}")

    rows = []
    for stock_id in order:
        frame = panel[stock_id]
        if date not in frame.index:
            raise ValueError(f"{stock_id} has no data for {date.date()}")
        row = frame.loc[date, list(names)].to_numpy(dtype=np.float64)
        if np.isnan(row).any():
            raise ValueError(f"{stock_id} has unavailable indicators on {date.date()}")
        rows.append(row)
    return MarketImage(date=date, stock_order=order, values=np.vstack(rows), indicator_names=names)


def usable_dates(series: Sequence[StockSeries], panel: IndicatorPanel, names: Sequence[str]) -> pd.DatetimeIndex:
    """Dates on which every stock has a complete indicator row."""

    usable: pd.DatetimeIndex | None = None
    for item in series:
        frame = panel[item.stock_id].loc[:, list(names)]
        dates = pd.DatetimeIndex(frame.index[frame.notna().all(axis=1).to_numpy()])
        usable = dates if usable is None else usable.intersection(dates)
    return usable if usable is not None else pd.DatetimeIndex([])


def build_images(
    series: Sequence[StockSeries],
    config: IndicatorConfig | None = None,
    fill_mode: FillMode = "carry-forward",
    panel: IndicatorPanel | None = None,
) -> list[MarketImage]:
    """Raw images for every date where all stocks are available, in date order."""

    if panel is None:
        panel = compute_panel(series, config, fill_mode)
    names = indicator_names(config)
    dates = usable_dates(series, panel, names)
    order = stock_order(series)
    stacked = np.stack([panel[stock_id].loc[dates, list(names)].to_numpy(dtype=np.float64) for stock_id in order])
    images = [
        MarketImage(date=date, stock_order=order, values=np.ascontiguousarray(stacked[:, index, :]), indicator_names=names)
        for index, date in enumerate(dates)
    ]
    logger.info("Assembled %s market images of shape %sx%s", len(images), len(order), len(names))
    return images


def fit_norm(train_images: Sequence[MarketImage]) -> NormStats:
    """Per-indicator min and max over the training images."""

    if not train_images:
        raise ValueError("fit_norm needs at least one training image")
    stacked = np.stack([image.values for image in train_images])
    minimum = stacked.min(axis=(0, 1))
    maximum = stacked.max(axis=(0, 1))
    names = train_images[0].indicator_names
    degenerate = tuple(name for name, low, high in zip(names, minimum, maximum) if high == low)
    for name in degenerate:
        logger.warning("Indicator %s is constant over the training period; normalising it to 0.0", name)
    return NormStats(
        indicator_names=names,
        minimum=minimum,
        maximum=maximum,
        degenerate=degenerate,
        fitted_dates=tuple(image.date for image in train_images),
    )


def normalise(values: np.ndarray, stats: NormStats) -> np.ndarray:
    """Apply the min-max map along the last axis without clamping."""

    span = stats.maximum - stats.minimum
    safe = np.where(span > 0, span, 1.0)
    scaled = (values - stats.minimum) / safe
    return np.where(span > 0, scaled, 0.0)


def apply_norm(image: MarketImage, stats: NormStats) -> MarketImage:
    if image.indicator_names != stats.indicator_names:
        raise ValueError("image indicators do not match the normalisation statistics")
    return MarketImage(
        date=image.date,
        stock_order=image.stock_order,
        values=normalise(image.values, stats),
        indicator_names=image.indicator_names,
    )
