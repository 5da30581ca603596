"""Common surface for every return-prediction model."""
from __future__ import annotations

import dataclasses
from abc import ABC, abstractmethod
from typing import Any, ClassVar

import numpy as np

from ..autodiff import Tensor
from ..marketdata.dataset import MarketDataset, SampleBatch


def uniform(rng: np.random.Generator, shape: tuple[int, ...], scale: float = 0.1) -> np.ndarray:
    """Weights drawn from U[-scale, scale]."""

    return rng.uniform(-scale, scale, size=shape)


def named_tensors(params: Any, prefix: str = "") -> dict[str, Tensor]:
    """Flatten a parameter dataclass (possibly nested) into ``name -> Tensor``."""

    named: dict[str, Tensor] = {}
    for item in dataclasses.fields(params):
        value = getattr(params, item.name)
        if isinstance(value, Tensor):
            named[f"{prefix}{item.name}"] = value
        elif dataclasses.is_dataclass(value):
            named.update(named_tensors(value, prefix=f"{prefix}{item.name}."))
    return named


class PredictiveModel(ABC):
    """A model mapping a batch of samples to one scaled-return prediction each."""

    name: ClassVar[str]
    gradient_trained: ClassVar[bool] = True

    @abstractmethod
    def parameters(self) -> dict[str, Tensor]:
        """Trainable tensors by stable name."""

    @abstractmethod
    def forward(self, batch: SampleBatch) -> Tensor:
        """Differentiable (batch,) predictions."""

    def predict(self, batch: SampleBatch) -> np.ndarray:
        return np.array(self.forward(batch).data, copy=True)

    def fit(self, dataset: MarketDataset) -> None:
        """Closed-form or full-batch fit; only models with ``gradient_trained = False`` use it."""

        raise NotImplementedError(f"{self.name} is trained with mini-batch Adam")

    def hyperparameters(self) -> dict[str, Any]:
        return {}

    def parameter_count(self) -> int:
        return sum(tensor.size for tensor in self.parameters().values())
