"""Read and write the per-stock CSV inputs of a market universe."""
from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import pandas as pd

from ..exceptions import DataError, MissingInputError
from .types import FUNDAMENTAL_COLUMNS, PRICE_COLUMNS, StockSeries

logger = logging.getLogger(__name__)

UNIVERSE_COLUMNS: tuple[str, ...] = ("stock_id", "sector_id", "subsector_id")


def _read_csv(path: Path, required: Sequence[str], **kwargs: object) -> pd.DataFrame:
    if not path.exists():
        raise MissingInputError(path)
    try:
        frame = pd.read_csv(path, **kwargs)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as exc:
        raise DataError(path, f"unreadable CSV ({exc})") from exc
    columns = list(frame.columns) + ([frame.index.name] if frame.index.name else [])
    missing = [column for column in required if column not in columns]
    if missing:
        raise DataError(path, f"missing columns {missing}")
    return frame


def load_universe(path: Path) -> pd.DataFrame:
    """Universe manifest with ``stock_id``, ``sector_id`` and ``subsector_id``."""

    frame = _read_csv(path, UNIVERSE_COLUMNS, dtype={"stock_id": str})
    if frame["stock_id"].duplicated().any():
        duplicate = frame.loc[frame["stock_id"].duplicated(), "stock_id"].iloc[0]
        raise DataError(path, f"duplicate stock_id {duplicate}")
    try:
        return frame.loc[:, list(UNIVERSE_COLUMNS)].astype({"sector_id": int, "subsector_id": int})
    except (TypeError, ValueError) as exc:
        raise DataError(path, f"non-integer sector ids ({exc})") from exc


def _read_dated(path: Path, columns: Sequence[str]) -> pd.DataFrame:
    frame = _read_csv(path, ("date", *columns), parse_dates=["date"], index_col="date", float_precision="round_trip")
    try:
        frame = frame.loc[:, list(columns)].astype(float).sort_index()
    except (TypeError, ValueError) as exc:
        raise DataError(path, f"non-numeric values ({exc})") from exc
    frame.index = pd.DatetimeIndex(frame.index, name="date")
    return frame


def load_stock_series(
    data_directory: Path,
    universe_file: str = "universe.csv",
    prices_dir: str = "prices",
    fundamentals_dir: str = "fundamentals",
) -> list[StockSeries]:
    """Load every stock named in the universe manifest under ``data_directory``."""

    universe = load_universe(data_directory / universe_file)
    series = []
    for row in universe.itertuples(index=False):
        prices_path = data_directory / prices_dir / f"{row.stock_id}.csv"
        prices = _read_dated(prices_path, PRICE_COLUMNS)
        fundamentals = _read_dated(data_directory / fundamentals_dir / f"{row.stock_id}.csv", FUNDAMENTAL_COLUMNS)
        item = StockSeries(
            stock_id=row.stock_id,
            sector_id=int(row.sector_id),
            subsector_id=int(row.subsector_id),
            prices=prices,
            fundamentals=fundamentals,
        )
        try:
            item.validate()
        except ValueError as exc:
            raise DataError(prices_path, str(exc)) from exc
        series.append(item)
    logger.info("Loaded %s stock series from %s", len(series), data_directory)
    return series


def save_stock_series(
    series: Sequence[StockSeries],
    data_directory: Path,
    universe_file: str = "universe.csv",
    prices_dir: str = "prices",
    fundamentals_dir: str = "fundamentals",
) -> Path:
    """Write the universe manifest plus one price and one fundamentals CSV per stock."""

    (data_directory / prices_dir).mkdir(parents=True, exist_ok=True)
    (data_directory / fundamentals_dir).mkdir(parents=True, exist_ok=True)
    manifest = pd.DataFrame(
        [(item.stock_id, item.sector_id, item.subsector_id) for item in series],
        columns=list(UNIVERSE_COLUMNS),
    )
    manifest_path = data_directory / universe_file
    manifest.to_csv(manifest_path, index=False)
    for item in series:
        prices = item.prices.loc[:, list(PRICE_COLUMNS)]
        prices.to_csv(data_directory / prices_dir / f"{item.stock_id}.csv", index_label="date", date_format="%Y-%m-%d", float_format="%.17g")
        fundamentals = item.fundamentals.loc[:, list(FUNDAMENTAL_COLUMNS)]
        fundamentals.to_csv(
            data_directory / fundamentals_dir / f"{item.stock_id}.csv",
            index_label="date",
            date_format="%Y-%m-%d",
            float_format="%.17g",
        )
    logger.info("Wrote %s stock series to %s", len(series), data_directory)
    return manifest_path
