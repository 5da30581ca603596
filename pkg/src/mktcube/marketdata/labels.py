"""Volatility-scaled forward-return labels."""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import pandas as pd

from .types import LabelEntry, StockSeries

DEFAULT_HORIZONS: tuple[int, ...] = (1, 5, 15, 30)
LABEL_COLUMNS: tuple[str, ...] = ("date", "stock_id", "horizon", "raw", "scaled", "valid")


def compute_labels(
    series: StockSeries,
    date: pd.Timestamp | str,
    horizons: Sequence[int] = DEFAULT_HORIZONS,
    sigma_window: int = 10,
    sigma_floor: float = 1e-8,
) -> list[LabelEntry]:
    """Labels of ``series`` at ``date``, one per horizon.

    ``raw`` is the fractional return from close(d) to close(d+n); ``scaled``
    divides it by the sample standard deviation of the daily returns on
    d-window .. d-1. A deviation below ``sigma_floor`` marks the label invalid.
    """

    date = pd.Timestamp(date)
    close = series.close.to_numpy(dtype=np.float64)
    try:
        position = series.dates.get_loc(date)
    except KeyError:
        raise KeyError(f"Unknown date for {series.stock_id}: {date.date()}") from None
    if position < sigma_window + 1:
        raise ValueError(f"{series.stock_id}: need {sigma_window + 1} days of history before {date.date()}")
    if position + max(horizons) >= len(close):
        raise ValueError(f"{series.stock_id}: need {max(horizons)} days after {date.date()}")

    window = close[position - sigma_window - 1 : position]
    daily = window[1:] / window[:-1] - 1.0
    sigma = float(np.std(daily, ddof=1))
    valid = sigma >= sigma_floor
    entries = []
    for horizon in horizons:
        raw = float(close[position + horizon] / close[position] - 1.0)
        entries.append(
            LabelEntry(
                date=date,
                stock_id=series.stock_id,
                horizon=horizon,
                raw=raw,
                scaled=raw / sigma if valid else float("nan"),
                sigma=sigma,
                valid=valid,
            )
        )
    return entries


def build_label_panel(
    series: Sequence[StockSeries],
    horizons: Sequence[int] = DEFAULT_HORIZONS,
    sigma_window: int = 10,
    sigma_floor: float = 1e-8,
) -> pd.DataFrame:
    """Long-format labels for every computable (date, stock, horizon)."""

    frames = []
    for item in series:
        close = item.close.astype(float)
        sigma = close.pct_change().shift(1).rolling(sigma_window).std(ddof=1)
        for horizon in horizons:
            raw = close.shift(-horizon) / close - 1.0
            computable = raw.notna() & sigma.notna()
            valid = sigma >= sigma_floor
            frames.append(
                pd.DataFrame(
                    {
                        "date": item.dates,
                        "stock_id": item.stock_id,
                        "horizon": horizon,
                        "raw": raw.to_numpy(),
                        "scaled": (raw / sigma.where(valid)).to_numpy(),
                        "valid": valid.to_numpy(),
                    }
                )[computable.to_numpy()]
            )
    if not frames:
        return pd.DataFrame(columns=list(LABEL_COLUMNS))
    panel = pd.concat(frames, ignore_index=True)
    return panel.sort_values(["date", "stock_id", "horizon"], kind="mergesort").reset_index(drop=True)
