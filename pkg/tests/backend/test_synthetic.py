from __future__ import annotations

import numpy as np
import pytest

from mktcube.config import SynthConfig
from mktcube.marketdata import synth_market


def test_same_seed_gives_identical_markets() -> None:
    first = synth_market(11, SynthConfig(m_stocks=6, n_sectors=3, n_days=80))
    second = synth_market(11, SynthConfig(m_stocks=6, n_sectors=3, n_days=80))

    for left, right in zip(first, second):
        assert left.prices.equals(right.prices)
        assert left.fundamentals.equals(right.fundamentals)


def test_different_seeds_differ() -> None:
    first = synth_market(1, n_days=40)
    second = synth_market(2, n_days=40)

    assert not np.allclose(first[0].close, second[0].close)


def test_bars_are_consistent_and_sectors_round_robin() -> None:
    universe = synth_market(3, SynthConfig(m_stocks=9, n_sectors=3, n_days=120))

    assert [item.sector_id for item in universe[:6]] == [0, 1, 2, 0, 1, 2]
    for item in universe:
        item.validate()
        assert len(item.prices) == 120
        assert len(item.fundamentals) == 2


def test_common_sector_factor_drives_correlation_to_one() -> None:
    config = SynthConfig(
        m_stocks=2,
        n_sectors=1,
        n_days=300,
        idio_sigma=1e-9,
        beta_market_min=0.0,
        beta_market_max=0.0,
        beta_sector_min=1.0,
        beta_sector_max=1.0,
    )

    first, second = synth_market(5, config)

    returns = [np.diff(np.log(item.close.to_numpy())) for item in (first, second)]
    assert np.corrcoef(returns[0], returns[1])[0, 1] > 0.9999


def test_lead_lag_couples_sector_to_its_leader() -> None:
    config = SynthConfig(
        m_stocks=4,
        n_sectors=2,
        n_days=400,
        factor_sigma=0.001,
        idio_sigma=0.01,
        beta_market_min=0.0,
        beta_market_max=0.0,
        beta_sector_min=1.0,
        beta_sector_max=1.0,
        lead_lag_strength=10.0,
    )
    universe = synth_market(9, config)

    leader = np.diff(np.log(universe[0].close.to_numpy()))
    follower = np.diff(np.log(universe[2].close.to_numpy()))
    lagged = np.corrcoef(leader[:-1], follower[1:])[0, 1]
    assert lagged > 0.3


def test_sectors_cannot_outnumber_stocks() -> None:
    with pytest.raises(ValueError):
        synth_market(0, SynthConfig(m_stocks=2, n_sectors=3))
