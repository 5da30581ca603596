"""Notification abstractions for training events."""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Literal

logger = logging.getLogger(__name__)

EventKind = Literal["new-best", "early-stop", "nan-abort", "run-complete"]


@dataclass(slots=True)
class TrainingEvent:
    """Container describing a noteworthy moment of a training run."""

    kind: EventKind
    model: str
    epoch: int
    message: str


class Notifier(ABC):
    """Base class for delivering training events."""

    @abstractmethod
    def send(self, events: Iterable[TrainingEvent]) -> None:
        """Dispatch the provided events."""


class NullNotifier(Notifier):
    """Drops every event."""

    def send(self, events: Iterable[TrainingEvent]) -> None:
        _ = list(events)


class LoggingNotifier(Notifier):
    """Writes events to the ``mktcube.notifications`` logger."""

    def send(self, events: Iterable[TrainingEvent]) -> None:
        for event in events:
            level = logging.ERROR if event.kind == "nan-abort" else logging.INFO
            logger.log(level, "[%s] %s epoch %s: %s", event.kind, event.model, event.epoch, event.message)
