"""Reconstruction training for MarketSegNet."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..autodiff import Adam, ModelCheckpoint, backward, mse
from ..config import SegNetConfig, TrainConfig
from ..exceptions import NumericalError
from ..notifications.base import NullNotifier, Notifier, TrainingEvent
from .network import MarketSegNet

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class AutoencoderResult:
    model: MarketSegNet
    checkpoint: ModelCheckpoint
    losses: list[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def _batches(count: int, batch_size: int, rng: np.random.Generator):
    while True:
        order = rng.permutation(count)
        for start in range(0, count, batch_size):
            yield order[start : start + batch_size]


def train_autoencoder(
    images: np.ndarray,
    embedding_dim: int,
    rng: np.random.Generator,
    config: SegNetConfig | None = None,
    train_config: TrainConfig | None = None,
    notifier: Notifier | None = None,
    steps: int | None = None,
    metadata: dict[str, Any] | None = None,
) -> AutoencoderResult:
    """Minimise per-pixel squared reconstruction error over (count, m, n) training images."""

    config = config or SegNetConfig()
    train_config = train_config or TrainConfig()
    notifier = notifier or NullNotifier()
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3 or images.shape[0] == 0:
        raise ValueError(f"expected a non-empty (count, m, n) image stack, got {images.shape}")
    steps = config.steps if steps is None else steps

    model = MarketSegNet(images.shape[2], embedding_dim, rng, config)
    params = model.parameters()
    optimizer = Adam(params, learning_rate=train_config.learning_rate, clip_norm=train_config.clip_norm)
    losses: list[float] = []
    batches = _batches(images.shape[0], config.batch_size, rng)
    for step in range(1, steps + 1):
        batch = images[next(batches)]
        optimizer.zero_grad()
        loss = mse(model.reconstruct(batch), batch)
        value = loss.item()
        if not np.isfinite(value):
            message = f"segnet k={embedding_dim}: non-finite loss at step {step}"
            notifier.send([TrainingEvent(kind="nan-abort", model="segnet", epoch=step, message=message)])
            raise NumericalError(message)
        losses.append(value)
        backward(loss)
        optimizer.step()
        if step % 100 == 0:
            logger.info("segnet k=%s step %s: loss=%.6f", embedding_dim, step, float(np.mean(losses[-100:])))

    checkpoint = ModelCheckpoint.capture(
        params,
        optimizer.state,
        metadata={
            "model": "segnet",
            "embedding_dim": embedding_dim,
            "n": images.shape[2],
            "hyperparameters": model.hyperparameters(),
            **(metadata or {}),
        },
    )
    result = AutoencoderResult(model=model, checkpoint=checkpoint, losses=losses)
    notifier.send(
        [TrainingEvent(kind="run-complete", model="segnet", epoch=steps, message=f"final loss {result.final_loss:.6f}")]
    )
    return result
