"""Application bootstrapper for the market cube toolkit."""
from __future__ import annotations

import logging

from .config import ExperimentConfig
from .notifications.base import LoggingNotifier, Notifier
from .scheduler.pool import WorkerPool
from .services.experiment_service import ExperimentService
from .services.model_registry import ModelRegistry
from .storage.repository import CsvRepository

logger = logging.getLogger(__name__)


def bootstrap_service(config: ExperimentConfig, notifier: Notifier | None = None) -> ExperimentService:
    """Wire the repository, registry, notifier and worker pool for one command."""

    pool = WorkerPool.from_environment()
    logger.debug("Worker pool capped at %s threads", pool.max_workers)
    return ExperimentService(
        config=config,
        repository=CsvRepository(config.output_directory),
        registry=ModelRegistry(),
        notifier=notifier or LoggingNotifier(),
        pool=pool,
    )


def run() -> None:
    """Entrypoint used by ``python -m mktcube`` and the console script."""

    from .cli import cli_app

    logging.basicConfig(level=logging.INFO)
    cli_app()


if __name__ == "__main__":  # pragma: no cover - manual execution only
    run()
