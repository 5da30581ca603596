"""Market-Attention (MA) and Market-Aware RNN (MA-RNN) models."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from ..autodiff import Tensor, additive_attention, concat, conv_day, linear, lstm_sequence, relu
from ..autodiff.tensor import ArrayLike, as_tensor
from ..config import MAConfig, MARNNConfig
from ..exceptions import ShapeError
from ..marketdata.dataset import SampleBatch
from ..marketdata.types import MarketCube
from .base import PredictiveModel, named_tensors, uniform


@dataclass(slots=True)
class MarketEncoderParams:
    """Day-wide convolution, stock embeddings, attention and the phi1 projection."""

    kernels: Tensor
    conv_bias: Tensor
    embeddings: Tensor
    w_sz: Tensor
    w_cz: Tensor
    attention_v: Tensor
    phi1_weight: Tensor
    phi1_bias: Tensor

    @classmethod
    def initialise(
        cls, rng: np.random.Generator, m: int, n: int, t: int, config: MAConfig, scale: float = 0.1
    ) -> MarketEncoderParams:
        return cls(
            kernels=Tensor.parameter(uniform(rng, (config.kernels, n, m), scale)),
            conv_bias=Tensor.parameter(uniform(rng, (config.kernels,), scale)),
            embeddings=Tensor.parameter(uniform(rng, (m, config.embedding_size), scale)),
            w_sz=Tensor.parameter(uniform(rng, (config.attention_size, config.embedding_size), scale)),
            w_cz=Tensor.parameter(uniform(rng, (config.attention_size, t), scale)),
            attention_v=Tensor.parameter(uniform(rng, (config.attention_size,), scale)),
            phi1_weight=Tensor.parameter(uniform(rng, (config.market_dim, t), scale)),
            phi1_bias=Tensor.parameter(uniform(rng, (config.market_dim,), scale)),
        )


@dataclass(slots=True)
class MAParams:
    encoder: MarketEncoderParams
    head_weight: Tensor
    head_bias: Tensor
    out_weight: Tensor
    out_bias: Tensor
    stock_order: tuple[str, ...] = ()

    def named(self) -> dict[str, Tensor]:
        return named_tensors(self)


@dataclass(slots=True)
class MARNNParams:
    encoder: MarketEncoderParams
    lstm_weight: Tensor
    phi2_weight: Tensor
    phi2_bias: Tensor
    fusion1_weight: Tensor
    fusion1_bias: Tensor
    fusion2_weight: Tensor
    fusion2_bias: Tensor
    out_weight: Tensor
    out_bias: Tensor
    stock_order: tuple[str, ...] = ()

    def named(self) -> dict[str, Tensor]:
        return named_tensors(self)


class MAOutput(NamedTuple):
    pooled: Tensor
    """Conditioned market embedding p, (batch, t)."""

    market: Tensor
    """phi1(p), (batch, market_dim)."""

    attention: Tensor
    prediction: Tensor


def _cube_values(cube: MarketCube | ArrayLike, stock_order: tuple[str, ...]) -> Tensor:
    if isinstance(cube, MarketCube):
        if stock_order and cube.stock_order != stock_order:
            raise ValueError("cube stock order does not match the embedding table")
        return Tensor(cube.values)
    return as_tensor(cube)


def encode_market(
    cube: MarketCube | ArrayLike,
    stock_index: int | np.ndarray,
    encoder: MarketEncoderParams,
    stock_order: tuple[str, ...] = (),
) -> tuple[Tensor, Tensor, Tensor]:
    """Return (pooled p, phi1(p), attention weights) for cube(s) and target stock(s)."""

    values = _cube_values(cube, stock_order)
    batched = values.ndim == 4
    m = encoder.embeddings.shape[0]
    indices = np.atleast_1d(np.asarray(stock_index, dtype=np.int64))
    if indices.min() < 0 or indices.max() >= m:
        raise IndexError(f"stock index out of range for {m} embeddings")
    if values.shape[-2] != m:
        raise ValueError(f"cube has {values.shape[-2]} stocks but the embedding table has {m}")
    features = conv_day(values, encoder.kernels, encoder.conv_bias)
    if batched:
        stock_emb = encoder.embeddings[indices]
    else:
        if indices.size != 1:
            raise ShapeError("an unbatched cube takes a single stock index")
        stock_emb = encoder.embeddings[int(indices[0])]
    attention = additive_attention(stock_emb, features, encoder.w_sz, encoder.w_cz, encoder.attention_v)
    market = relu(linear(attention.pooled if batched else attention.pooled.reshape(1, -1), encoder.phi1_weight, encoder.phi1_bias))
    return attention.pooled, market, attention.weights


def ma_forward(cube: MarketCube | ArrayLike, stock_index: int | np.ndarray, params: MAParams) -> MAOutput:
    """MA prediction: attention-pooled market embedding through a small ReLU head."""

    pooled, market, weights = encode_market(cube, stock_index, params.encoder, params.stock_order)
    hidden = relu(linear(market, params.head_weight, params.head_bias))
    prediction = linear(hidden, params.out_weight, params.out_bias)[:, 0]
    return MAOutput(pooled=pooled, market=market, attention=weights, prediction=prediction)


def marnn_forward(
    cube: MarketCube | ArrayLike,
    stock_history: ArrayLike,
    stock_index: int | np.ndarray,
    params: MARNNParams,
) -> Tensor:
    """MA-RNN prediction fusing phi1(p) with phi2 of the last LSTM state over the stock's history."""

    history = as_tensor(stock_history)
    values = _cube_values(cube, params.stock_order)
    t = values.shape[-3]
    if history.ndim == 2:
        history = history.reshape(1, *history.shape)
    if history.shape[1] != t:
        raise ShapeError(f"stock history has {history.shape[1]} steps, cube has {t}")
    _, market, _ = encode_market(values, stock_index, params.encoder)
    state = lstm_sequence(history, params.lstm_weight)
    stock = relu(linear(state.h, params.phi2_weight, params.phi2_bias))
    fused = concat([market, stock], axis=-1)
    hidden = relu(linear(fused, params.fusion1_weight, params.fusion1_bias))
    hidden = relu(linear(hidden, params.fusion2_weight, params.fusion2_bias))
    return linear(hidden, params.out_weight, params.out_bias)[:, 0]


class MAModel(PredictiveModel):
    name = "ma"

    def __init__(
        self,
        m: int,
        n: int,
        t: int,
        rng: np.random.Generator,
        config: MAConfig | None = None,
        init_scale: float = 0.1,
        stock_order: tuple[str, ...] = (),
    ) -> None:
        self.config = config or MAConfig()
        cfg = self.config
        self.params = MAParams(
            encoder=MarketEncoderParams.initialise(rng, m, n, t, cfg, init_scale),
            head_weight=Tensor.parameter(uniform(rng, (cfg.head_hidden, cfg.market_dim), init_scale)),
            head_bias=Tensor.parameter(uniform(rng, (cfg.head_hidden,), init_scale)),
            out_weight=Tensor.parameter(uniform(rng, (1, cfg.head_hidden), init_scale)),
            out_bias=Tensor.parameter(uniform(rng, (1,), init_scale)),
            stock_order=stock_order,
        )

    def parameters(self) -> dict[str, Tensor]:
        return self.params.named()

    def forward(self, batch: SampleBatch) -> Tensor:
        return ma_forward(batch.cubes, batch.stock_index, self.params).prediction

    def attention(self, batch: SampleBatch) -> np.ndarray:
        return ma_forward(batch.cubes, batch.stock_index, self.params).attention.data

    def hyperparameters(self) -> dict[str, Any]:
        cfg = self.config
        return {
            "ma.kernels": cfg.kernels,
            "ma.embedding_size": cfg.embedding_size,
            "ma.attention_size": cfg.attention_size,
            "ma.market_dim": cfg.market_dim,
            "ma.head_hidden": cfg.head_hidden,
        }


class MARNNModel(PredictiveModel):
    name = "ma-rnn"

    def __init__(
        self,
        m: int,
        n: int,
        t: int,
        rng: np.random.Generator,
        config: MAConfig | None = None,
        rnn_config: MARNNConfig | None = None,
        init_scale: float = 0.1,
        stock_order: tuple[str, ...] = (),
    ) -> None:
        self.config = config or MAConfig()
        self.rnn_config = rnn_config or MARNNConfig()
        cfg, rnn = self.config, self.rnn_config
        if len(rnn.fusion_hidden) != 2:
            raise ValueError("MA-RNN expects exactly two fusion layers")
        first, second = rnn.fusion_hidden
        self.params = MARNNParams(
            encoder=MarketEncoderParams.initialise(rng, m, n, t, cfg, init_scale),
            lstm_weight=Tensor.parameter(uniform(rng, (4 * rnn.lstm_cell, rnn.lstm_cell + n), init_scale)),
            phi2_weight=Tensor.parameter(uniform(rng, (rnn.stock_dim, rnn.lstm_cell), init_scale)),
            phi2_bias=Tensor.parameter(uniform(rng, (rnn.stock_dim,), init_scale)),
            fusion1_weight=Tensor.parameter(uniform(rng, (first, cfg.market_dim + rnn.stock_dim), init_scale)),
            fusion1_bias=Tensor.parameter(uniform(rng, (first,), init_scale)),
            fusion2_weight=Tensor.parameter(uniform(rng, (second, first), init_scale)),
            fusion2_bias=Tensor.parameter(uniform(rng, (second,), init_scale)),
            out_weight=Tensor.parameter(uniform(rng, (1, second), init_scale)),
            out_bias=Tensor.parameter(uniform(rng, (1,), init_scale)),
            stock_order=stock_order,
        )

    def parameters(self) -> dict[str, Tensor]:
        return self.params.named()

    def forward(self, batch: SampleBatch) -> Tensor:
        return marnn_forward(batch.cubes, batch.histories, batch.stock_index, self.params)

    def hyperparameters(self) -> dict[str, Any]:
        cfg, rnn = self.config, self.rnn_config
        return {
            "ma.kernels": cfg.kernels,
            "ma.embedding_size": cfg.embedding_size,
            "ma.attention_size": cfg.attention_size,
            "ma.market_dim": cfg.market_dim,
            "marnn.lstm_cell": rnn.lstm_cell,
            "marnn.stock_dim": rnn.stock_dim,
            "marnn.fusion_hidden": list(rnn.fusion_hidden),
        }
