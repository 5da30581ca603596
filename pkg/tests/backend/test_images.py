from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from mktcube.marketdata import (
    MarketCube,
    MarketImage,
    apply_norm,
    build_image,
    build_images,
    compute_panel,
    fit_norm,
    indicator_names,
    stock_order,
    warm_up_days,
)


def _image(values: list[list[float]], day: str = "2021-01-04") -> MarketImage:
    array = np.array(values, dtype=np.float64)
    return MarketImage(
        date=pd.Timestamp(day),
        stock_order=tuple(f"S{index}" for index in range(array.shape[0])),
        values=array,
        indicator_names=tuple(f"c{index}" for index in range(array.shape[1])),
    )


def test_stock_order_groups_sectors_then_subsectors(small_market) -> None:
    order = stock_order(small_market)
    sector_of = {item.stock_id: item.sector_id for item in small_market}

    sectors = [sector_of[stock_id] for stock_id in order]
    assert sectors == sorted(sectors)
    assert order[:4] == ("S000", "S004", "S002", "S006")


def test_build_image_matches_the_indicator_panel(small_market) -> None:
    panel = compute_panel(small_market)
    day = small_market[0].dates[warm_up_days() + 3]

    image = build_image(small_market, day, panel=panel)

    assert image.shape == (8, 40)
    row = list(image.stock_order).index("S003")
    np.testing.assert_array_equal(image.values[row], panel["S003"].loc[day].to_numpy())


def test_build_image_rejects_unknown_date(small_market) -> None:
    panel = compute_panel(small_market)

    with pytest.raises(KeyError, match="Unknown date"):
        build_image(small_market, "1999-01-01", panel=panel)


def test_build_image_names_the_stock_without_data(small_market) -> None:
    panel = compute_panel(small_market)
    day = small_market[0].dates[warm_up_days() + 3]
    panel["S005"] = panel["S005"].drop(index=day)

    with pytest.raises(ValueError, match="S005"):
        build_image(small_market, day, panel=panel)


def test_build_image_rejects_warm_up_days(small_market) -> None:
    panel = compute_panel(small_market)

    with pytest.raises(ValueError, match="unavailable"):
        build_image(small_market, small_market[0].dates[5], panel=panel)


def test_build_images_starts_after_the_warm_up(small_market) -> None:
    images = build_images(small_market)

    assert len(images) == 160 - warm_up_days()
    assert images[0].date == small_market[0].dates[warm_up_days()]
    assert all(image.indicator_names == indicator_names() for image in images)
    cube = MarketCube.from_images(images[:10])
    assert cube.shape == (10, 8, 40)


def test_fit_norm_maps_training_range_onto_unit_interval() -> None:
    train = [_image([[1.0, 5.0], [3.0, 5.0]]), _image([[2.0, 5.0], [-1.0, 5.0]], "2021-01-05")]

    stats = fit_norm(train)
    normalised = apply_norm(train[0], stats)

    np.testing.assert_array_equal(stats.minimum, [-1.0, 5.0])
    np.testing.assert_array_equal(stats.maximum, [3.0, 5.0])
    assert stats.degenerate == ("c1",)
    np.testing.assert_array_equal(normalised.values, [[0.5, 0.0], [1.0, 0.0]])
    assert stats.fitted_dates == (pd.Timestamp("2021-01-04"), pd.Timestamp("2021-01-05"))


def test_apply_norm_does_not_clamp_out_of_range_values() -> None:
    stats = fit_norm([_image([[0.0], [10.0]])])

    shifted = apply_norm(_image([[15.0], [-5.0]], "2022-06-01"), stats)

    np.testing.assert_array_equal(shifted.values, [[1.5], [-0.5]])


def test_apply_norm_rejects_mismatched_indicators() -> None:
    stats = fit_norm([_image([[0.0, 1.0]])])

    with pytest.raises(ValueError):
        apply_norm(_image([[0.0]]), stats)


def test_fit_norm_needs_training_images() -> None:
    with pytest.raises(ValueError):
        fit_norm([])
