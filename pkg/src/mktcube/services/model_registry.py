"""Registry of predictive model constructors and checkpoint restoration."""
from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..autodiff import ModelCheckpoint
from ..config import ExperimentConfig, apply_overrides, format_value
from ..exceptions import FileFormatError
from ..models import FFNNModel, LRModel, LSTMRNNModel, MAModel, MARNNModel, PredictiveModel, SVRModel
from ..segnet import MarketSegNet

logger = logging.getLogger(__name__)


@dataclass(slots=True, frozen=True)
class ModelDims:
    """Shape of the inputs a model is built for."""

    m: int
    """Stocks per market image."""
    n: int
    """Indicators per stock."""
    t: int
    """Look-back window in trading days."""
    stock_order: tuple[str, ...] = ()


ModelFactory = Callable[[ModelDims, ExperimentConfig, np.random.Generator], PredictiveModel]


def _lr(dims: ModelDims, config: ExperimentConfig, rng: np.random.Generator) -> PredictiveModel:
    return LRModel(dims.t, dims.n, config.baselines)


def _svr(dims: ModelDims, config: ExperimentConfig, rng: np.random.Generator) -> PredictiveModel:
    return SVRModel(dims.t, dims.n, config.baselines)


def _ffnn(dims: ModelDims, config: ExperimentConfig, rng: np.random.Generator) -> PredictiveModel:
    return FFNNModel(dims.t, dims.n, rng, config.baselines, config.train.init_scale)


def _lstm_rnn(dims: ModelDims, config: ExperimentConfig, rng: np.random.Generator) -> PredictiveModel:
    return LSTMRNNModel(dims.n, rng, config.baselines, config.train.init_scale)


def _ma(dims: ModelDims, config: ExperimentConfig, rng: np.random.Generator) -> PredictiveModel:
    return MAModel(dims.m, dims.n, dims.t, rng, config.ma, config.train.init_scale, dims.stock_order)


def _ma_rnn(dims: ModelDims, config: ExperimentConfig, rng: np.random.Generator) -> PredictiveModel:
    return MARNNModel(dims.m, dims.n, dims.t, rng, config.ma, config.marnn, config.train.init_scale, dims.stock_order)


def default_factories() -> dict[str, ModelFactory]:
    return {
        "lr": _lr,
        "svr": _svr,
        "ffnn": _ffnn,
        "lstm-rnn": _lstm_rnn,
        "ma": _ma,
        "ma-rnn": _ma_rnn,
    }


def _config_from_metadata(metadata: dict[str, Any], source: str) -> ExperimentConfig:
    hyperparameters = metadata.get("hyperparameters", {})
    if not isinstance(hyperparameters, dict):
        raise FileFormatError(source, 0, "checkpoint hyperparameters are not a mapping")
    return apply_overrides(ExperimentConfig(), {key: format_value(value) for key, value in hyperparameters.items()})


def _required(metadata: dict[str, Any], key: str, source: str) -> Any:
    if key not in metadata:
        raise FileFormatError(source, 0, f"checkpoint metadata lacks {key!r}")
    return metadata[key]


@dataclass(slots=True)
class ModelRegistry:
    """Maps model names to constructors and rebuilds models from checkpoints."""

    factories: dict[str, ModelFactory] = field(default_factory=default_factories)

    def names(self) -> list[str]:
        return list(self.factories)

    def register(self, name: str, factory: ModelFactory) -> None:
        self.factories[name] = factory

    def build(
        self,
        name: str,
        dims: ModelDims,
        config: ExperimentConfig,
        rng: np.random.Generator,
    ) -> PredictiveModel:
        if name not in self.factories:
            raise KeyError(f"Unknown model: {name}")
        model = self.factories[name](dims, config, rng)
        logger.info("Built %s for m=%s n=%s t=%s (%s parameters)", name, dims.m, dims.n, dims.t, model.parameter_count())
        return model

    def metadata_for(self, model: PredictiveModel, dims: ModelDims, horizon: int) -> dict[str, Any]:
        """Checkpoint metadata that ``restore`` can rebuild ``model`` from."""

        return {
            "model": model.name,
            "m": dims.m,
            "n": dims.n,
            "t": dims.t,
            "horizon": horizon,
            "stock_order": list(dims.stock_order),
            "hyperparameters": model.hyperparameters(),
        }

    def restore(self, checkpoint: ModelCheckpoint, source: str = "<checkpoint>") -> PredictiveModel:
        """Rebuild a predictive model and load the stored parameters into it."""

        metadata = checkpoint.metadata
        name = _required(metadata, "model", source)
        if name == "segnet":
            raise ValueError(f"{source} holds a MarketSegNet; use restore_segnet")
        dims = ModelDims(
            m=int(_required(metadata, "m", source)),
            n=int(_required(metadata, "n", source)),
            t=int(_required(metadata, "t", source)),
            stock_order=tuple(metadata.get("stock_order", ())),
        )
        config = _config_from_metadata(metadata, source)
        model = self.build(name, dims, config, np.random.default_rng(0))
        checkpoint.restore_into(model.parameters())
        return model

    def restore_segnet(self, checkpoint: ModelCheckpoint, source: str = "<checkpoint>") -> MarketSegNet:
        metadata = checkpoint.metadata
        name = _required(metadata, "model", source)
        if name != "segnet":
            raise ValueError(f"{source} holds a {name} model, not a MarketSegNet")
        config = _config_from_metadata(metadata, source)
        model = MarketSegNet(
            int(_required(metadata, "n", source)),
            int(_required(metadata, "embedding_dim", source)),
            np.random.default_rng(0),
            config.segnet,
        )
        checkpoint.restore_into(model.parameters())
        return model
