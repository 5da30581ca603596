"""MarketSegNet: convolutional encoder/decoder that transfers max-pool indices."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from ..autodiff import PoolRecord, Tensor, adaptive_avg_pool, conv1d, linear, maxpool_with_indices, relu, unpool
from ..autodiff.tensor import ArrayLike, as_tensor
from ..config import SegNetConfig
from ..exceptions import ShapeError


def fan_in_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


@dataclass(slots=True)
class ConvStage:
    weight: Tensor
    bias: Tensor


class Encoding(NamedTuple):
    embedding: Tensor
    """(batch, k) market embedding."""

    pool_records: list[PoolRecord]
    input_shape: tuple[int, int]
    """(m, n) of the encoded images."""


class MarketSegNet:
    """Encoder stages conv -> ReLU -> max-pool along the stock axis, a linear
    bottleneck behind an adaptive pool, and a mirrored decoder that unpools
    through the stored argmax positions before densifying by convolution.
    """

    def __init__(
        self,
        n: int,
        embedding_dim: int,
        rng: np.random.Generator,
        config: SegNetConfig | None = None,
    ) -> None:
        self.config = config or SegNetConfig()
        self.n = n
        self.embedding_dim = embedding_dim
        channels = (n, *self.config.channels)
        kernel = self.config.kernel_size
        if kernel % 2 == 0:
            raise ValueError("MarketSegNet needs an odd kernel size")
        self.encoder = [
            ConvStage(
                weight=Tensor.parameter(fan_in_uniform(rng, (c_out, c_in, kernel), c_in * kernel)),
                bias=Tensor.parameter(fan_in_uniform(rng, (c_out,), c_in * kernel)),
            )
            for c_in, c_out in zip(channels[:-1], channels[1:])
        ]
        bottleneck_in = channels[-1] * self.config.grid_rows
        self.bottleneck_weight = Tensor.parameter(fan_in_uniform(rng, (embedding_dim, bottleneck_in), bottleneck_in))
        self.bottleneck_bias = Tensor.parameter(fan_in_uniform(rng, (embedding_dim,), bottleneck_in))
        self.expand_weight = Tensor.parameter(fan_in_uniform(rng, (bottleneck_in, embedding_dim), embedding_dim))
        self.expand_bias = Tensor.parameter(fan_in_uniform(rng, (bottleneck_in,), embedding_dim))
        reversed_channels = channels[::-1]
        self.decoder = [
            ConvStage(
                weight=Tensor.parameter(fan_in_uniform(rng, (c_out, c_in, kernel), c_in * kernel)),
                bias=Tensor.parameter(fan_in_uniform(rng, (c_out,), c_in * kernel)),
            )
            for c_in, c_out in zip(reversed_channels[:-1], reversed_channels[1:])
        ]

    @property
    def depth(self) -> int:
        return len(self.encoder)

    def parameters(self) -> dict[str, Tensor]:
        named: dict[str, Tensor] = {}
        for index, stage in enumerate(self.encoder):
            named[f"encoder{index}.weight"] = stage.weight
            named[f"encoder{index}.bias"] = stage.bias
        named["bottleneck.weight"] = self.bottleneck_weight
        named["bottleneck.bias"] = self.bottleneck_bias
        named["expand.weight"] = self.expand_weight
        named["expand.bias"] = self.expand_bias
        for index, stage in enumerate(self.decoder):
            named[f"decoder{index}.weight"] = stage.weight
            named[f"decoder{index}.bias"] = stage.bias
        return named

    def hyperparameters(self) -> dict[str, Any]:
        cfg = self.config
        return {
            "segnet.channels": list(cfg.channels),
            "segnet.kernel_size": cfg.kernel_size,
            "segnet.pool_window": cfg.pool_window,
            "segnet.grid_rows": cfg.grid_rows,
            "embedding_dim": self.embedding_dim,
        }

    def encode(self, images: ArrayLike) -> Encoding:
        """Embed (m, n) or (batch, m, n) normalised images."""

        x = as_tensor(images)
        if x.ndim == 2:
            x = x.reshape(1, *x.shape)
        if x.ndim != 3 or x.shape[2] != self.n:
            raise ShapeError(f"MarketSegNet expects (batch, m, {self.n}) images, got {x.shape}")
        m = x.shape[1]
        reduction = self.config.pool_window**self.depth
        if m < reduction:
            raise ShapeError(f"images need at least {reduction} stocks for {self.depth} pooling stages, got {m}")

        # Indicators are channels, stocks are the convolved axis.
        features = x.transpose(0, 2, 1)
        records = []
        for stage in self.encoder:
            features = relu(conv1d(features, stage.weight, stage.bias))
            record = maxpool_with_indices(features, self.config.pool_window, axis=-1)
            records.append(record)
            features = record.output
        grid = adaptive_avg_pool(features, self.config.grid_rows)
        flat = grid.reshape(grid.shape[0], -1)
        embedding = linear(flat, self.bottleneck_weight, self.bottleneck_bias)
        return Encoding(embedding=embedding, pool_records=records, input_shape=(m, self.n))

    def decode(self, embedding: ArrayLike, pool_records: list[PoolRecord]) -> Tensor:
        """Reconstruct (batch, m, n) images from embeddings and their pool records."""

        embedding = as_tensor(embedding)
        if embedding.ndim == 1:
            embedding = embedding.reshape(1, -1)
        if len(pool_records) != self.depth:
            raise ShapeError(f"decoder has {self.depth} stages but received {len(pool_records)} pool records")
        batch = embedding.shape[0]
        channels = self.config.channels[-1]
        expanded = linear(embedding, self.expand_weight, self.expand_bias)
        grid = expanded.reshape(batch, channels, self.config.grid_rows)
        deepest = pool_records[-1]
        features = adaptive_avg_pool(grid, deepest.output.shape[-1])

        for position, stage in enumerate(self.decoder):
            record = pool_records[self.depth - 1 - position]
            if record.output.shape[0] != batch:
                raise ShapeError("pool records belong to a different batch")
            features = unpool(record, values=features)
            features = conv1d(features, stage.weight, stage.bias)
            if position < self.depth - 1:
                features = relu(features)
        return features.transpose(0, 2, 1)

    def reconstruct(self, images: ArrayLike, records_transform: Any = None) -> Tensor:
        """``decode(encode(images))``; ``records_transform`` may rewrite the pool records."""

        encoding = self.encode(images)
        records = encoding.pool_records if records_transform is None else records_transform(encoding.pool_records)
        return self.decode(encoding.embedding, records)
