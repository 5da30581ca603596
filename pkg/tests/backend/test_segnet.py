from __future__ import annotations

from typing import Iterable

import numpy as np
import pandas as pd
import pytest

from mktcube.config import ExperimentConfig, SegNetConfig, TrainConfig, apply_overrides
from mktcube.exceptions import NumericalError, ShapeError
from mktcube.marketdata import MarketImage, prepare_market, synth_market
from mktcube.notifications.base import Notifier, TrainingEvent
from mktcube.segnet import MarketSegNet, embed_images, embedding_shift, segnet_error, train_autoencoder

SMALL = SegNetConfig(channels=(4, 6, 8), grid_rows=4, steps=5, batch_size=4)
M, N = 12, 5


class RecordingNotifier(Notifier):
    def __init__(self) -> None:
        self.events: list[TrainingEvent] = []

    def send(self, events: Iterable[TrainingEvent]) -> None:
        self.events.extend(list(events))


@pytest.fixture
def images() -> np.ndarray:
    return np.random.default_rng(3).uniform(0.0, 1.0, size=(6, M, N))


@pytest.fixture
def network() -> MarketSegNet:
    return MarketSegNet(N, 16, np.random.default_rng(4), SMALL)


@pytest.mark.parametrize("k", [16, 32, 64, 128])
def test_embedding_length_matches_the_configured_size(k: int, images: np.ndarray) -> None:
    model = MarketSegNet(N, k, np.random.default_rng(0), SMALL)

    encoding = model.encode(images)

    assert encoding.embedding.shape == (6, k)
    assert len(encoding.pool_records) == 3
    assert encoding.input_shape == (M, N)


def test_reconstruction_has_the_input_shape_for_any_universe_size(network: MarketSegNet) -> None:
    for m in (8, 9, 12, 31):
        image = np.random.default_rng(m).uniform(size=(m, N))

        output = network.reconstruct(image).data

        assert output.shape == (1, m, N)
        assert np.isfinite(output).all()


def test_encoding_is_deterministic_and_continuous(network: MarketSegNet, images: np.ndarray) -> None:
    noise = np.random.default_rng(9).normal(scale=1e-6, size=images[0].shape)

    first = network.encode(images[0]).embedding.data
    second = network.encode(images[0]).embedding.data
    nearby = network.encode(images[0] + noise).embedding.data

    np.testing.assert_array_equal(first, second)
    assert np.abs(nearby - first).max() < 1e-3


def test_too_few_stocks_for_the_pooling_depth(network: MarketSegNet) -> None:
    with pytest.raises(ShapeError, match="at least 8"):
        network.encode(np.zeros((7, N)))


def test_wrong_indicator_count_is_rejected(network: MarketSegNet) -> None:
    with pytest.raises(ShapeError):
        network.encode(np.zeros((M, N + 1)))


def test_decode_needs_one_record_per_stage(network: MarketSegNet, images: np.ndarray) -> None:
    encoding = network.encode(images)

    with pytest.raises(ShapeError, match="pool records"):
        network.decode(encoding.embedding, encoding.pool_records[:2])


def test_zero_decoder_weights_emit_the_final_bias(network: MarketSegNet, images: np.ndarray) -> None:
    network.expand_weight.data[:] = 0.0
    for stage in network.decoder:
        stage.weight.data[:] = 0.0
    encoding = network.encode(images[:2])

    output = network.decode(np.zeros((2, 16)), encoding.pool_records).data

    expected = np.broadcast_to(network.decoder[-1].bias.data, (2, M, N))
    np.testing.assert_array_equal(output, expected)


@pytest.fixture(scope="module")
def trained_on_market() -> tuple[MarketSegNet, np.ndarray]:
    overrides = {"synth.m_stocks": "16", "synth.n_sectors": "4", "synth.n_days": "200", "labels.horizons": "1"}
    config = apply_overrides(ExperimentConfig(), overrides)
    prepared = prepare_market(synth_market(config.rng("data"), config.synth), config)
    train_images = np.stack([image.values for image in prepared.normalised_images("train")])
    held_out = np.stack([image.values for image in prepared.normalised_images("validation")])

    result = train_autoencoder(
        train_images,
        16,
        np.random.default_rng(0),
        SegNetConfig(channels=(4, 6, 8), grid_rows=4, batch_size=10),
        TrainConfig(learning_rate=0.01),
        steps=400,
    )
    return result.model, held_out


def test_ablating_pool_indices_hurts_a_trained_network(trained_on_market: tuple[MarketSegNet, np.ndarray]) -> None:
    model, held_out = trained_on_market

    intact = segnet_error(model, held_out)
    ablated = segnet_error(model, held_out, ablate=True)

    assert np.isfinite(intact)
    assert ablated > intact


def test_ablation_changes_an_untrained_reconstruction(network: MarketSegNet, images: np.ndarray) -> None:
    assert segnet_error(network, images) != segnet_error(network, images, ablate=True)


def test_dropping_one_stock_barely_moves_a_trained_embedding(
    trained_on_market: tuple[MarketSegNet, np.ndarray],
) -> None:
    model, held_out = trained_on_market

    shifts = [embedding_shift(model, image, drop_row=7) for image in held_out]

    assert all(np.isfinite(shift) and shift > 0.0 for shift in shifts)
    assert float(np.mean(shifts)) < 0.1


def test_embedding_shift_rejects_rows_outside_the_image(network: MarketSegNet, images: np.ndarray) -> None:
    with pytest.raises(IndexError):
        embedding_shift(network, images[0], drop_row=M)



def test_embed_images_builds_a_dated_table(network: MarketSegNet, images: np.ndarray) -> None:
    dates = pd.bdate_range("2021-02-01", periods=len(images))
    stack = [
        MarketImage(date=date, stock_order=tuple(f"S{i}" for i in range(M)), values=values, indicator_names=tuple("abcde"))
        for date, values in zip(dates, images)
    ]

    table = embed_images(network, stack)

    assert list(table.columns) == ["date"] + [f"dim_{index}" for index in range(16)]
    assert list(table["date"]) == list(dates)
    np.testing.assert_allclose(table.iloc[0, 1:].to_numpy(dtype=float), network.encode(images[0]).embedding.data[0])


def test_training_reduces_reconstruction_error(images: np.ndarray) -> None:
    notifier = RecordingNotifier()

    result = train_autoencoder(
        images[:1],
        8,
        np.random.default_rng(0),
        SMALL,
        TrainConfig(learning_rate=0.01),
        notifier=notifier,
        steps=200,
    )

    assert result.final_loss < 0.5 * result.losses[0]
    assert result.checkpoint.metadata["n"] == N
    assert result.checkpoint.metadata["embedding_dim"] == 8
    assert [event.kind for event in notifier.events] == ["run-complete"]


def test_training_is_reproducible(images: np.ndarray) -> None:
    first = train_autoencoder(images, 4, np.random.default_rng(1), SMALL)
    second = train_autoencoder(images, 4, np.random.default_rng(1), SMALL)

    assert first.losses == second.losses


def test_non_finite_images_abort_training(images: np.ndarray) -> None:
    images[0, 0, 0] = np.nan
    notifier = RecordingNotifier()

    with pytest.raises(NumericalError):
        train_autoencoder(images, 4, np.random.default_rng(1), SMALL, notifier=notifier)

    assert notifier.events[0].kind == "nan-abort"


@pytest.mark.slow
def test_single_image_is_memorised() -> None:
    image = np.random.default_rng(11).uniform(size=(1, 32, 40))

    result = train_autoencoder(image, 32, np.random.default_rng(0), SegNetConfig(), TrainConfig(), steps=5000)

    assert result.final_loss < 1e-4
