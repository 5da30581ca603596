from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from mktcube.exceptions import FileFormatError, MissingInputError
from mktcube.marketdata import MarketCube, load_cube, save_cube
from mktcube.marketdata.cubefile import cube_from_bytes, cube_to_bytes


@pytest.fixture
def cube() -> MarketCube:
    values = np.random.default_rng(5).normal(size=(3, 2, 4))
    values[0, 0, 0] = 1.0 / 3.0
    return MarketCube(
        dates=tuple(pd.bdate_range("2021-03-01", periods=3)),
        stock_order=("AAA", "BBB"),
        indicator_names=("rsi", "roc", "eps", "volatility"),
        values=values,
    )


def test_cube_file_round_trip_is_bit_exact(tmp_path, cube: MarketCube) -> None:
    path = save_cube(cube, tmp_path / "cubes" / "train.mkcb")

    loaded = load_cube(path)

    assert loaded.dates == cube.dates
    assert loaded.stock_order == cube.stock_order
    assert loaded.indicator_names == cube.indicator_names
    assert loaded.values.tobytes() == cube.values.tobytes()


def test_cube_header_starts_with_magic_and_shape(cube: MarketCube) -> None:
    payload = cube_to_bytes(cube)

    assert payload[:4] == b"MKCB"
    assert np.frombuffer(payload[8:20], dtype="<u4").tolist() == [3, 2, 4]


def test_truncated_cube_values_are_rejected(cube: MarketCube) -> None:
    payload = cube_to_bytes(cube)

    with pytest.raises(FileFormatError, match="cube values"):
        cube_from_bytes(payload[:-8])


def test_foreign_magic_is_rejected(cube: MarketCube) -> None:
    with pytest.raises(FileFormatError, match="bad magic"):
        cube_from_bytes(b"MKTC" + cube_to_bytes(cube)[4:])


def test_cube_rejects_unordered_dates() -> None:
    dates = (pd.Timestamp("2021-03-02"), pd.Timestamp("2021-03-01"))

    with pytest.raises(ValueError):
        MarketCube(dates=dates, stock_order=("A",), indicator_names=("rsi",), values=np.zeros((2, 1, 1)))


def test_missing_cube_file(tmp_path) -> None:
    with pytest.raises(MissingInputError):
        load_cube(tmp_path / "absent.mkcb")
