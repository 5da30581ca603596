from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from mktcube.marketdata import StockSeries, build_label_panel, compute_labels


def _from_returns(returns: list[float], start: float = 100.0) -> StockSeries:
    close = start * np.cumprod(np.concatenate([[1.0], 1.0 + np.asarray(returns)]))
    dates = pd.bdate_range("2022-01-03", periods=len(close))
    prices = pd.DataFrame(
        {"open": close, "high": close, "low": close, "close": close, "volume": np.full(len(close), 1e5)},
        index=dates,
    )
    return StockSeries(stock_id="L1", sector_id=0, subsector_id=0, prices=prices)


def test_scaled_label_divides_by_trailing_sample_deviation() -> None:
    swing = 0.01 * np.sqrt(0.9)
    series = _from_returns([swing, -swing] * 5 + [0.0, 0.02, 0.0, 0.0, 0.0])

    (entry,) = compute_labels(series, series.dates[11], horizons=(1,))

    assert entry.sigma == pytest.approx(0.01, rel=1e-9)
    assert entry.raw == pytest.approx(0.02, rel=1e-12)
    assert entry.scaled == pytest.approx(2.0, rel=1e-9)
    assert entry.valid


def test_multi_day_raw_return_compounds() -> None:
    series = _from_returns([0.01, -0.01] * 6 + [0.1, 0.1, 0.1])

    entries = compute_labels(series, series.dates[12], horizons=(1, 3))

    assert [entry.horizon for entry in entries] == [1, 3]
    assert entries[1].raw == pytest.approx(1.1**3 - 1.0, rel=1e-12)


def test_constant_history_marks_label_invalid() -> None:
    series = _from_returns([0.0] * 12 + [0.05])

    (entry,) = compute_labels(series, series.dates[12], horizons=(1,))

    assert entry.sigma == 0.0
    assert not entry.valid
    assert np.isnan(entry.scaled)
    assert entry.raw == pytest.approx(0.05)


def test_compute_labels_rejects_short_history_and_unknown_dates() -> None:
    series = _from_returns([0.01, -0.01] * 10)

    with pytest.raises(ValueError, match="history"):
        compute_labels(series, series.dates[10], horizons=(1,))
    with pytest.raises(ValueError, match="days after"):
        compute_labels(series, series.dates[15], horizons=(1, 30))
    with pytest.raises(KeyError):
        compute_labels(series, "2030-01-01", horizons=(1,))


def test_labels_ignore_prices_after_the_horizon(small_market) -> None:
    series = small_market[0]
    date = series.dates[50]
    before = compute_labels(series, date)

    series.prices.iloc[81:, series.prices.columns.get_loc("close")] *= 3.0
    after = compute_labels(series, date)

    assert [entry.scaled for entry in after] == [entry.scaled for entry in before]


def test_panel_agrees_with_pointwise_labels(small_market) -> None:
    panel = build_label_panel(small_market[:3], horizons=(1, 5))

    for series in small_market[:3]:
        for position in (11, 40, 150):
            date = series.dates[position]
            for entry in compute_labels(series, date, horizons=(1, 5)):
                row = panel[(panel["date"] == date) & (panel["stock_id"] == series.stock_id) & (panel["horizon"] == entry.horizon)]
                assert len(row) == 1
                assert row["raw"].iloc[0] == pytest.approx(entry.raw, rel=1e-12)
                assert row["scaled"].iloc[0] == pytest.approx(entry.scaled, rel=1e-9)
                assert bool(row["valid"].iloc[0]) == entry.valid


def test_panel_omits_rows_without_history_or_future(small_market) -> None:
    series = small_market[0]

    panel = build_label_panel([series], horizons=(5,))

    assert panel["date"].min() == series.dates[11]
    assert panel["date"].max() == series.dates[-6]
    assert list(panel.columns) == ["date", "stock_id", "horizon", "raw", "scaled", "valid"]
