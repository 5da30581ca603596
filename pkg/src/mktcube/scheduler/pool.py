"""Bounded worker pool for per-stock and per-chunk fan-out."""
from __future__ import annotations

import logging
import os
import threading
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from ..exceptions import ConfigError

logger = logging.getLogger(__name__)

THREADS_VARIABLE = "MKTCUBE_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def threads_from_environment(default: int = 1) -> int:
    raw = os.environ.get(THREADS_VARIABLE, "").strip()
    if not raw:
        return default
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(THREADS_VARIABLE, f"expected a positive integer, got {raw!r}") from None
    if threads < 1:
        raise ConfigError(THREADS_VARIABLE, f"expected a positive integer, got {threads}")
    return threads


class WorkerPool:
    """Ordered ``map`` over a lazily created thread pool.

    With one worker every call runs inline on the caller's thread, which
    keeps single-threaded runs deterministic.
    """

    def __init__(self, max_workers: int = 1) -> None:
        if max_workers < 1:
            raise ValueError("max_workers must be at least 1")
        self._max_workers = max_workers
        self._executor: ThreadPoolExecutor | None = None
        self._lock = threading.Lock()

    @classmethod
    def from_environment(cls) -> WorkerPool:
        return cls(threads_from_environment())

    @property
    def max_workers(self) -> int:
        return self._max_workers

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """Apply ``fn`` to every item; results keep the input order."""

        items = list(items)
        if self._max_workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with self._lock:
            if self._executor is None:
                logger.debug("Starting worker pool with %s threads", self._max_workers)
                self._executor = ThreadPoolExecutor(max_workers=self._max_workers, thread_name_prefix="mktcube")
            executor = self._executor
        return list(executor.map(fn, items))

    def close(self) -> None:
        with self._lock:
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None

    def __enter__(self) -> WorkerPool:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()
