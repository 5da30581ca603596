from __future__ import annotations

import numpy as np
import pytest

from mktcube.config import SegNetConfig
from mktcube.segnet import MarketSegNet, compare, pca_error, pca_fit, pca_roundtrip


@pytest.fixture
def train_images() -> np.ndarray:
    rng = np.random.default_rng(0)
    factors = rng.normal(size=(40, 3))
    loadings = rng.normal(size=(3, 8 * 4))
    return (factors @ loadings + 0.01 * rng.normal(size=(40, 32))).reshape(40, 8, 4)


def test_principal_axes_are_orthonormal(train_images: np.ndarray) -> None:
    model = pca_fit(train_images, 6)

    np.testing.assert_allclose(model.axes @ model.axes.T, np.eye(6), atol=1e-8)
    assert model.k == 6
    assert (np.diff(model.singular_values) <= 0).all()


def test_full_rank_pca_reconstructs_exactly(train_images: np.ndarray) -> None:
    model = pca_fit(train_images, 32)

    np.testing.assert_allclose(pca_roundtrip(train_images, model), train_images, atol=1e-10)


def test_error_shrinks_with_more_components(train_images: np.ndarray) -> None:
    errors = [pca_error(train_images, pca_fit(train_images, k)) for k in (1, 2, 3, 6)]

    assert errors == sorted(errors, reverse=True)
    assert errors[2] < 1e-3


def test_single_image_keeps_its_shape(train_images: np.ndarray) -> None:
    model = pca_fit(train_images, 3)

    assert pca_roundtrip(train_images[0], model).shape == (8, 4)
    assert model.transform(train_images[:5]).shape == (5, 3)


@pytest.mark.parametrize("k", [0, 41, 33])
def test_component_count_is_bounded(k: int) -> None:
    images = np.random.default_rng(1).normal(size=(40, 8, 4))
    if k == 33:
        images = np.random.default_rng(1).normal(size=(50, 8, 4))

    with pytest.raises(ValueError):
        pca_fit(images, k)


def test_images_of_another_shape_are_rejected(train_images: np.ndarray) -> None:
    model = pca_fit(train_images, 3)

    with pytest.raises(ValueError, match="fitted on"):
        model.transform(np.zeros((2, 9, 4)))


def test_compare_reports_both_models_per_dimension(train_images: np.ndarray) -> None:
    config = SegNetConfig(channels=(2, 3, 4), grid_rows=2)
    segnets = {k: MarketSegNet(4, k, np.random.default_rng(k), config) for k in (2, 3)}
    pcas = {k: pca_fit(train_images[:30], k) for k in (2, 3)}

    table = compare(train_images[30:], segnets, pcas)

    assert list(table.columns) == ["embedding_dim", "segnet_mse", "pca_mse"]
    assert table["embedding_dim"].tolist() == [2, 3]
    assert table.loc[1, "pca_mse"] == pytest.approx(pca_error(train_images[30:], pcas[3]))
    assert np.isfinite(table["segnet_mse"]).all()
