"""Sector-factor synthetic market standing in for proprietary constituent data."""
from __future__ import annotations

import dataclasses
import logging

import numpy as np
import pandas as pd

from ..config import SynthConfig
from .types import FUNDAMENTAL_COLUMNS, StockSeries

logger = logging.getLogger(__name__)

# Long-run level and quarterly noise of each fundamental's AR(1) process.
_FUNDAMENTAL_LEVELS = np.array([2.0, 1.5, 0.8, 2.5, 0.12, 18.0, 0.04])
_FUNDAMENTAL_NOISE = np.array([0.3, 0.1, 0.08, 0.2, 0.02, 2.0, 0.01])
_FUNDAMENTAL_PERSISTENCE = 0.9


def _assign_sectors(config: SynthConfig) -> list[tuple[str, int, int]]:
    """Round-robin sector membership so ids alone do not reveal the grouping."""

    members = []
    for index in range(config.m_stocks):
        sector = index % config.n_sectors
        subsector = (index // config.n_sectors) % max(config.subsectors_per_sector, 1)
        members.append((f"S{index:03d}", sector, subsector))
    return members


def synth_market(
    seed: int | np.random.Generator,
    config: SynthConfig | None = None,
    **overrides: object,
) -> list[StockSeries]:
    """Generate a seeded universe of stocks driven by market and sector factors.

    Daily log-returns are ``beta_mkt * market + beta_sec * sector + noise``.
    Keyword ``overrides`` replace individual ``SynthConfig`` fields.
    """

    config = config or SynthConfig()
    if overrides:
        config = dataclasses.replace(config, **overrides)
    if config.n_sectors < 1 or config.m_stocks < config.n_sectors:
        raise ValueError("synth_market needs m_stocks >= n_sectors >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    members = _assign_sectors(config)
    m, days, sectors = config.m_stocks, config.n_days, config.n_sectors
    beta_market = rng.uniform(config.beta_market_min, config.beta_market_max, size=m)
    beta_sector = rng.uniform(config.beta_sector_min, config.beta_sector_max, size=m)
    market = rng.normal(0.0, config.factor_sigma, size=days)
    sector_base = rng.normal(0.0, config.factor_sigma, size=(days, sectors))
    idio = rng.normal(0.0, config.idio_sigma, size=(days, m))

    sector_factor = sector_base.copy()
    if config.cross_sector_nonlinearity:
        # Each sector responds to the size of its neighbour's move, not its sign.
        magnitude = np.abs(np.roll(sector_base, 1, axis=1)) - config.factor_sigma * np.sqrt(2.0 / np.pi)
        sector_factor = sector_factor + config.cross_sector_nonlinearity * magnitude
    if config.lead_lag_strength:
        leaders = [next(index for index, (_, sector, _) in enumerate(members) if sector == s) for s in range(sectors)]
        lagged = np.zeros((days, sectors))
        lagged[1:] = idio[:-1, leaders]
        scale = config.factor_sigma / config.idio_sigma if config.idio_sigma > 0 else 0.0
        sector_factor = sector_factor + config.lead_lag_strength * scale * lagged

    sector_of = np.array([sector for _, sector, _ in members])
    log_returns = beta_market * market[:, None] + beta_sector * sector_factor[:, sector_of] + idio

    start_price = rng.uniform(20.0, 200.0, size=m)
    close = start_price * np.exp(np.cumsum(log_returns, axis=0))
    gap = np.exp(rng.normal(0.0, config.idio_sigma / 2.0, size=(days, m)))
    previous_close = np.vstack([start_price, close[:-1]])
    open_ = previous_close * gap
    upper_wick = np.exp(np.abs(rng.normal(0.0, config.idio_sigma / 2.0, size=(days, m))))
    lower_wick = np.exp(-np.abs(rng.normal(0.0, config.idio_sigma / 2.0, size=(days, m))))
    high = np.maximum(open_, close) * upper_wick
    low = np.minimum(open_, close) * lower_wick
    volume = rng.lognormal(mean=13.0, sigma=0.3, size=(days, m))

    dates = pd.bdate_range(pd.Timestamp(config.start_date), periods=days)
    period = max(config.fundamental_period, 1)
    quarter_days = np.arange(0, days, period)
    level = _FUNDAMENTAL_LEVELS * rng.uniform(0.5, 1.5, size=(m, len(FUNDAMENTAL_COLUMNS)))
    state = level + _FUNDAMENTAL_NOISE * rng.normal(size=(m, len(FUNDAMENTAL_COLUMNS)))
    fundamentals = np.empty((len(quarter_days), m, len(FUNDAMENTAL_COLUMNS)))
    for quarter in range(len(quarter_days)):
        if quarter:
            shock = _FUNDAMENTAL_NOISE * rng.normal(size=(m, len(FUNDAMENTAL_COLUMNS)))
            state = level + _FUNDAMENTAL_PERSISTENCE * (state - level) + shock
        fundamentals[quarter] = state

    universe = []
    for index, (stock_id, sector, subsector) in enumerate(members):
        prices = pd.DataFrame(
            {
                "open": open_[:, index],
                "high": high[:, index],
                "low": low[:, index],
                "close": close[:, index],
                "volume": volume[:, index],
            },
            index=dates,
        )
        prices.index.name = "date"
        observed = pd.DataFrame(fundamentals[:, index, :], index=dates[quarter_days], columns=list(FUNDAMENTAL_COLUMNS))
        observed.index.name = "date"
        universe.append(
            StockSeries(stock_id=stock_id, sector_id=sector, subsector_id=subsector, prices=prices, fundamentals=observed)
        )
    logger.info("Generated synthetic market: %s stocks, %s sectors, %s days", m, sectors, days)
    return universe
