"""Per-stock indicator pipeline: price-volume ratios, returns, technicals, fundamentals."""
from __future__ import annotations

import logging
from typing import Literal

import numpy as np
import pandas as pd

from ..config import IndicatorConfig
from .types import FUNDAMENTAL_COLUMNS, StockSeries

logger = logging.getLogger(__name__)

INDICATOR_MANIFEST_VERSION = 1

PRICE_VOLUME_COLUMNS: tuple[str, ...] = (
    "close_to_open",
    "high_to_open",
    "low_to_open",
    "close_to_high",
    "close_to_low",
    "high_to_low",
    "volume_ratio",
)
LAGGED_RETURN_COLUMNS: tuple[str, ...] = tuple(f"ret_lag_{lag}" for lag in range(1, 6))
CUMULATIVE_RETURN_SPANS: tuple[int, ...] = (5, 10, 15, 20, 25, 30)
CUMULATIVE_RETURN_COLUMNS: tuple[str, ...] = tuple(f"cum_ret_{span}" for span in CUMULATIVE_RETURN_SPANS)
TECHNICAL_COLUMNS: tuple[str, ...] = (
    "boll_pct_b",
    "boll_bandwidth",
    "dmi_plus_di",
    "dmi_minus_di",
    "dmi_adx",
    "rsi",
    "macd_line",
    "macd_signal",
    "macd_hist",
    "roc",
    "roc_long",
    "momentum",
    "momentum_long",
    "volatility",
    "atr_ratio",
)

INDICATOR_MANIFEST: tuple[str, ...] = (
    PRICE_VOLUME_COLUMNS
    + LAGGED_RETURN_COLUMNS
    + CUMULATIVE_RETURN_COLUMNS
    + TECHNICAL_COLUMNS
    + FUNDAMENTAL_COLUMNS
)

FillMode = Literal["carry-forward", "backfill"]


def indicator_names(config: IndicatorConfig | None = None) -> tuple[str, ...]:
    """Manifest columns selected by ``config`` in manifest order."""

    config = config or IndicatorConfig()
    if not config.columns:
        return INDICATOR_MANIFEST
    unknown = [name for name in config.columns if name not in INDICATOR_MANIFEST]
    if unknown:
        raise KeyError(f"Unknown indicator columns: {unknown}")
    selected = set(config.columns)
    return tuple(name for name in INDICATOR_MANIFEST if name in selected)


def warm_up_days(config: IndicatorConfig | None = None) -> int:
    """Number of leading trading days without a full set of technical indicators."""

    config = config or IndicatorConfig()
    return max(
        config.macd_slow + config.macd_signal - 1,
        max(CUMULATIVE_RETURN_SPANS) + 1,
        2 * config.dmi_period,
        config.boll_period,
        2 * config.roc_period + 1,
        2 * config.momentum_period + 1,
        config.rsi_period + 1,
        config.volume_window,
        config.volatility_window + 1,
    )


def fill_fundamentals(series: StockSeries, mode: FillMode = "carry-forward") -> pd.DataFrame:
    """Densify sparse fundamental observations onto the series' trading days.

    ``carry-forward`` uses the latest observation on or before each day and
    leaves days before the first observation empty. ``backfill`` uses
    the next observation on or after each day and carries the last one
    forward past the end of the observations.
    """

    observations = series.fundamentals.sort_index()
    if observations.empty:
        raise ValueError(f"{series.stock_id}: no fundamental observations to fill from")
    observations = observations.loc[:, list(FUNDAMENTAL_COLUMNS)].astype(float)
    observations = observations[~observations.index.duplicated(keep="last")]
    grid = series.dates.union(pd.DatetimeIndex(observations.index))
    aligned = observations.reindex(grid)
    if mode == "carry-forward":
        filled = aligned.ffill()
    elif mode == "backfill":
        filled = aligned.bfill().ffill()
    else:
        raise ValueError(f"unknown fill mode {mode!r}")
    return filled.reindex(series.dates)


def _rsi(close: pd.Series, period: int) -> pd.Series:
    """Cutler's RSI: simple rolling means of gains and losses, not Wilder smoothing."""

    delta = close.diff()
    gain = delta.clip(lower=0.0).rolling(period).mean()
    loss = (-delta).clip(lower=0.0).rolling(period).mean()
    total = gain + loss
    rsi = 100.0 * gain / total.where(total > 0)
    # Flat windows have no gains or losses; report the neutral level.
    return rsi.where(total > 0, 50.0).where(total.notna())


def _macd(close: pd.Series, fast: int, slow: int, signal: int) -> tuple[pd.Series, pd.Series, pd.Series]:
    line = close.ewm(span=fast, adjust=False).mean() - close.ewm(span=slow, adjust=False).mean()
    signal_line = line.ewm(span=signal, adjust=False).mean()
    return line, signal_line, line - signal_line


def _bollinger(close: pd.Series, period: int, width: float) -> tuple[pd.Series, pd.Series]:
    middle = close.rolling(period).mean()
    spread = close.rolling(period).std(ddof=0)
    upper = middle + width * spread
    lower = middle - width * spread
    band = upper - lower
    pct_b = ((close - lower) / band.where(band > 0)).where(band > 0, 0.5).where(band.notna())
    bandwidth = band / middle
    return pct_b, bandwidth


def _true_range(frame: pd.DataFrame) -> pd.Series:
    previous = frame["close"].shift(1)
    ranges = pd.concat(
        [
            frame["high"] - frame["low"],
            (frame["high"] - previous).abs(),
            (frame["low"] - previous).abs(),
        ],
        axis=1,
    )
    return ranges.max(axis=1).where(previous.notna())


def _dmi(frame: pd.DataFrame, period: int) -> tuple[pd.Series, pd.Series, pd.Series, pd.Series]:
    """+DI, -DI and ADX from simple rolling means, plus the ATR they share.

    Like ``_rsi`` this replaces Wilder's recursive smoothing with plain
    ``period``-day windows, so a value depends on the last ``2 * period + 1``
    bars only and a truncated history reproduces it exactly.
    """

    up_move = frame["high"].diff()
    down_move = -frame["low"].diff()
    plus_dm = up_move.where((up_move > down_move) & (up_move > 0), 0.0).where(up_move.notna())
    minus_dm = down_move.where((down_move > up_move) & (down_move > 0), 0.0).where(down_move.notna())
    atr = _true_range(frame).rolling(period).mean()
    safe_atr = atr.where(atr > 0)
    plus_di = (100.0 * plus_dm.rolling(period).mean() / safe_atr).where(atr > 0, 0.0).where(atr.notna())
    minus_di = (100.0 * minus_dm.rolling(period).mean() / safe_atr).where(atr > 0, 0.0).where(atr.notna())
    di_total = plus_di + minus_di
    dx = (100.0 * (plus_di - minus_di).abs() / di_total.where(di_total > 0)).where(di_total > 0, 0.0)
    adx = dx.where(di_total.notna()).rolling(period).mean()
    return plus_di, minus_di, adx, atr


def compute_indicators(
    series: StockSeries,
    config: IndicatorConfig | None = None,
    fill_mode: FillMode = "carry-forward",
) -> pd.DataFrame:
    """Daily indicator frame for one stock, columns in manifest order.

    Rows inside the warm-up period are all-NaN; a row with any NaN is
    unavailable for image assembly.
    """

    config = config or IndicatorConfig()
    prices = series.prices.astype(float)
    open_, high, low, close, volume = (prices[name] for name in ("open", "high", "low", "close", "volume"))

    columns: dict[str, pd.Series] = {
        "close_to_open": close / open_,
        "high_to_open": high / open_,
        "low_to_open": low / open_,
        "close_to_high": close / high,
        "close_to_low": close / low,
        "high_to_low": high / low,
    }
    mean_volume = volume.rolling(config.volume_window).mean()
    columns["volume_ratio"] = (volume / mean_volume.where(mean_volume > 0)).where(mean_volume > 0, 1.0).where(
        mean_volume.notna()
    )

    for lag in range(1, 6):
        columns[f"ret_lag_{lag}"] = close.shift(lag - 1) / close.shift(lag) - 1.0
    for span in CUMULATIVE_RETURN_SPANS:
        columns[f"cum_ret_{span}"] = close / close.shift(span) - 1.0

    columns["boll_pct_b"], columns["boll_bandwidth"] = _bollinger(close, config.boll_period, config.boll_width)
    plus_di, minus_di, adx, atr = _dmi(prices, config.dmi_period)
    columns["dmi_plus_di"], columns["dmi_minus_di"], columns["dmi_adx"] = plus_di, minus_di, adx
    columns["rsi"] = _rsi(close, config.rsi_period)
    columns["macd_line"], columns["macd_signal"], columns["macd_hist"] = _macd(
        close, config.macd_fast, config.macd_slow, config.macd_signal
    )
    columns["roc"] = 100.0 * (close / close.shift(config.roc_period) - 1.0)
    columns["roc_long"] = 100.0 * (close / close.shift(2 * config.roc_period) - 1.0)
    columns["momentum"] = close - close.shift(config.momentum_period)
    columns["momentum_long"] = close - close.shift(2 * config.momentum_period)
    columns["volatility"] = close.pct_change().rolling(config.volatility_window).std(ddof=1)
    columns["atr_ratio"] = atr / close

    fundamentals = fill_fundamentals(series, fill_mode)
    for name in FUNDAMENTAL_COLUMNS:
        columns[name] = fundamentals[name]

    frame = pd.DataFrame(columns, index=series.dates)
    frame.iloc[: warm_up_days(config)] = np.nan
    selected = indicator_names(config)
    logger.debug("Computed %s indicators for %s over %s days", len(selected), series.stock_id, len(frame))
    return frame.loc[:, list(selected)]
