"""Coordinates data preparation, training, evaluation and reporting."""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..autodiff import ModelCheckpoint, load_checkpoint, save_checkpoint
from ..config import ExperimentConfig, log_config
from ..exceptions import ConfigError, FileFormatError
from ..marketdata import (
    MarketCube,
    NormStats,
    PreparedMarket,
    load_stock_series,
    prepare_market,
    save_cube,
    save_stock_series,
    synth_market,
)
from ..marketdata.dataset import PARTITIONS, MarketDataset
from ..marketdata.images import normalise
from ..models import EpochMetric, EvaluationResult, PredictiveModel, evaluate, train
from ..notifications.base import Notifier, TrainingEvent
from ..scheduler.pool import WorkerPool
from ..segnet import AutoencoderResult, MarketSegNet, compare, embed_images, pca_fit, segnet_error, train_autoencoder
from ..storage.repository import CsvRepository
from .model_registry import ModelDims, ModelRegistry

logger = logging.getLogger(__name__)

NORM_MIN_KEY = "norm.min"
NORM_MAX_KEY = "norm.max"


@dataclass(slots=True)
class RunReport:
    """Summary written next to every training run."""

    model: str
    horizon: int
    seed: int
    config: dict[str, str]
    metrics: list[dict[str, Any]] = field(default_factory=list)
    test_metrics: dict[str, float] = field(default_factory=dict)
    best_epoch: int = 0
    stopped_early: bool = False
    wall_clock_seconds: float = 0.0
    checkpoint: str = ""


@dataclass(slots=True)
class TrainedRun:
    model: PredictiveModel
    checkpoint: ModelCheckpoint
    metrics: list[EpochMetric]
    report: RunReport


def _norm_extras(stats: NormStats) -> dict[str, np.ndarray]:
    return {NORM_MIN_KEY: stats.minimum.copy(), NORM_MAX_KEY: stats.maximum.copy()}


def _stats_from_checkpoint(checkpoint: ModelCheckpoint, indicator_names: tuple[str, ...], source: str) -> NormStats | None:
    if NORM_MIN_KEY not in checkpoint.extras:
        return None
    minimum = checkpoint.extras[NORM_MIN_KEY]
    maximum = checkpoint.extras.get(NORM_MAX_KEY)
    if maximum is None or minimum.shape != (len(indicator_names),) or maximum.shape != minimum.shape:
        raise FileFormatError(source, 0, "normalisation statistics do not match the indicator manifest")
    degenerate = tuple(name for name, low, high in zip(indicator_names, minimum, maximum) if high == low)
    return NormStats(indicator_names=indicator_names, minimum=minimum, maximum=maximum, degenerate=degenerate)


@dataclass(slots=True)
class ExperimentService:
    """High-level service behind every command of the CLI."""

    config: ExperimentConfig
    repository: CsvRepository
    registry: ModelRegistry
    notifier: Notifier
    pool: WorkerPool = field(default_factory=WorkerPool)
    _prepared: PreparedMarket | None = field(default=None, init=False, repr=False)
    _datasets: dict[tuple[int, int], MarketDataset] = field(default_factory=dict, init=False, repr=False)

    # Data ---------------------------------------------------------------------
    def cmd_synth(self) -> Path:
        """Write a seeded synthetic universe into the data directory."""

        log_config(self.config)
        if self.config.data.source != "synth":
            raise ConfigError("data.source", "synth writes generated data; set data.source=synth")
        self.config.ensure_directories()
        series = synth_market(self.config.rng("data"), self.config.synth)
        data = self.config.data
        save_stock_series(series, self.config.data_directory, data.universe_file, data.prices_dir, data.fundamentals_dir)
        logger.info("Synthesised %s stocks x %s days into %s", len(series), self.config.synth.n_days, self.config.data_directory)
        return self.config.data_directory

    def prepared(self) -> PreparedMarket:
        """Indicators, images, split and labels for the configured data directory (cached)."""

        if self._prepared is None:
            data = self.config.data
            series = load_stock_series(self.config.data_directory, data.universe_file, data.prices_dir, data.fundamentals_dir)
            self._prepared = prepare_market(series, self.config, mapper=self.pool.map)
        return self._prepared

    def dataset(self, horizon: int, lookback: int | None = None) -> MarketDataset:
        lookback = self.config.train.lookback if lookback is None else lookback
        key = (horizon, lookback)
        if key not in self._datasets:
            self._datasets[key] = self.prepared().dataset(horizon, lookback)
        return self._datasets[key]

    def cmd_build_images(self) -> dict[str, Path]:
        """Persist normalised cubes per partition, normalisation statistics and labels."""

        log_config(self.config)
        self.config.ensure_directories()
        prepared = self.prepared()
        written: dict[str, Path] = {}
        cube_dir = self.repository.base_path / "cubes"
        full = MarketCube(
            dates=tuple(prepared.dates),
            stock_order=prepared.stock_order,
            indicator_names=prepared.indicator_names,
            values=prepared.values,
        )
        written["market"] = save_cube(full, cube_dir / "market.mkcb")
        for partition in PARTITIONS:
            images = prepared.normalised_images(partition)
            if not images:
                logger.warning("Partition %s has no images; no cube written", partition)
                continue
            written[partition] = save_cube(MarketCube.from_images(images), cube_dir / f"{partition}.mkcb")
        written["normstats"] = self.repository.write_norm_stats(prepared.norm_stats)
        written["labels"] = self.repository.write_labels(prepared.labels)
        return written

    # Predictive models -----------------------------------------------------------
    def _dims(self, dataset: MarketDataset) -> ModelDims:
        return ModelDims(m=dataset.m, n=dataset.n, t=dataset.lookback, stock_order=dataset.stock_order)

    def train_model(self, name: str, horizon: int) -> TrainedRun:
        """Build and fit one predictive model, then score the held-out partitions that have samples.

        Runs on pool workers during a benchmark, so it never submits to the pool itself.
        """

        started = time.perf_counter()
        prepared = self.prepared()
        dataset = self.dataset(horizon)
        dims = self._dims(dataset)
        model = self.registry.build(name, dims, self.config, self.config.rng(f"init/{name}/h{horizon}"))
        metadata = self.registry.metadata_for(model, dims, horizon)
        metadata["indicator_names"] = list(prepared.indicator_names)
        metadata["seed"] = self.config.seed
        result = train(
            model,
            dataset,
            self.config.train,
            self.config.rng(f"shuffle/{name}/h{horizon}"),
            notifier=self.notifier,
            metadata=metadata,
            extras=_norm_extras(prepared.norm_stats),
        )
        test_metrics: dict[str, float] = {}
        for partition in ("validation", "backtest"):
            if len(dataset.samples(partition)):
                test_metrics[partition] = evaluate(model, dataset, partition).mse
        report = RunReport(
            model=name,
            horizon=horizon,
            seed=self.config.seed,
            config=self.config.as_items(),
            metrics=[dataclasses.asdict(metric) for metric in result.metrics],
            test_metrics=test_metrics,
            best_epoch=result.best_epoch,
            stopped_early=result.stopped_early,
            wall_clock_seconds=time.perf_counter() - started,
        )
        return TrainedRun(model=model, checkpoint=result.checkpoint, metrics=result.metrics, report=report)

    def cmd_train(self) -> RunReport:
        """Train ``config.model`` at ``config.horizon``; writes checkpoint, metrics CSV and run report."""

        log_config(self.config)
        self.config.ensure_directories()
        if self.config.model == "segnet":
            return self._train_segnet()
        run = self.train_model(self.config.model, self.config.horizon)
        path = save_checkpoint(run.checkpoint, self.config.checkpoint_path())
        logger.info("Saved checkpoint %s", path)
        run.report.checkpoint = str(path)
        self.repository.write_metrics(run.model.name, self.config.horizon, run.metrics)
        self.repository.write_report(run.model.name, self.config.horizon, run.report)
        self.notifier.send(
            [
                TrainingEvent(
                    kind="run-complete",
                    model=run.model.name,
                    epoch=run.report.best_epoch,
                    message=", ".join(f"{split} mse {mse:.6f}" for split, mse in run.report.test_metrics.items()),
                )
            ]
        )
        return run.report

    def _train_segnet(self) -> RunReport:
        started = time.perf_counter()
        prepared = self.prepared()
        k = self.config.embedding_dim
        result = self._fit_segnet(prepared, k)
        path = save_checkpoint(result.checkpoint, self.config.checkpoint_path("segnet"))
        logger.info("Saved checkpoint %s", path)
        metrics = [EpochMetric(step, "train", loss) for step, loss in enumerate(result.losses, start=1)]
        self.repository.write_metrics("segnet", k, metrics)
        test_images = self._image_stack(prepared, "backtest")
        test_metrics: dict[str, float] = {}
        if len(test_images):
            test_metrics["backtest"] = segnet_error(result.model, test_images)
        report = RunReport(
            model="segnet",
            horizon=k,
            seed=self.config.seed,
            config=self.config.as_items(),
            metrics=[dataclasses.asdict(metric) for metric in metrics],
            test_metrics=test_metrics,
            best_epoch=len(metrics),
            wall_clock_seconds=time.perf_counter() - started,
            checkpoint=str(path),
        )
        self.repository.write_report("segnet", k, report)
        return report

    def _load(self, checkpoint_path: Path | None) -> tuple[ModelCheckpoint, str]:
        path = checkpoint_path or self.config.checkpoint_path()
        return load_checkpoint(path), str(path)

    def _renormalised(self, checkpoint: ModelCheckpoint, source: str) -> PreparedMarket:
        prepared = self.prepared()
        stored = checkpoint.metadata.get("indicator_names")
        if stored is not None and tuple(stored) != prepared.indicator_names:
            raise ConfigError("indicators.columns", f"{source} was trained on a different indicator manifest")
        stats = _stats_from_checkpoint(checkpoint, prepared.indicator_names, source)
        if stats is None:
            return prepared
        raw = np.stack([image.values for image in prepared.raw_images])
        return dataclasses.replace(prepared, values=normalise(raw, stats), norm_stats=stats)

    def cmd_evaluate(self, checkpoint_path: Path | None = None, split: str | None = None) -> EvaluationResult:
        """Score a stored checkpoint; writes prediction rows and an evaluation summary."""

        log_config(self.config)
        split = split or self.config.benchmark.split
        if split not in PARTITIONS:
            raise ConfigError("benchmark.split", f"unknown partition {split!r}")
        checkpoint, source = self._load(checkpoint_path)
        model = self.registry.restore(checkpoint, source)
        horizon = int(checkpoint.metadata.get("horizon", self.config.horizon))
        prepared = self._renormalised(checkpoint, source)
        dataset = prepared.dataset(horizon, int(checkpoint.metadata["t"]))
        result = evaluate(model, dataset, split, mapper=self.pool.map)
        logger.info("%s h=%s %s mse=%.6f over %s samples (%s excluded)", model.name, horizon, split, result.mse, result.count, result.excluded)
        self.repository.write_predictions(model.name, horizon, split, result.predictions)
        self.repository.write_evaluation(model.name, horizon, split, result)
        return result

    # MarketSegNet ------------------------------------------------------------------
    def _image_stack(self, prepared: PreparedMarket, partition: str) -> np.ndarray:
        images = prepared.normalised_images(partition)
        if not images:
            return np.empty((0, len(prepared.stock_order), len(prepared.indicator_names)))
        return np.stack([image.values for image in images])

    def _fit_segnet(self, prepared: PreparedMarket, k: int) -> AutoencoderResult:
        train_images = self._image_stack(prepared, "train")
        return train_autoencoder(
            train_images,
            k,
            self.config.rng(f"segnet/k{k}"),
            self.config.segnet,
            self.config.train,
            notifier=self.notifier,
            metadata={"indicator_names": list(prepared.indicator_names), "seed": self.config.seed},
        )

    def cmd_embed(self, checkpoint_path: Path | None = None) -> pd.DataFrame:
        """Embed every market image with a trained MarketSegNet."""

        log_config(self.config)
        if checkpoint_path is None:
            checkpoint_path = Path(self.config.checkpoint) if self.config.checkpoint else self.config.checkpoint_path("segnet")
        path = checkpoint_path
        checkpoint = load_checkpoint(path)
        model: MarketSegNet = self.registry.restore_segnet(checkpoint, str(path))
        prepared = self._renormalised(checkpoint, str(path))
        frame = embed_images(model, prepared.normalised_images())
        self.repository.write_embeddings(model.embedding_dim, frame)
        return frame

    def cmd_compare_pca(self) -> pd.DataFrame:
        """MarketSegNet against PCA reconstruction error on the backtest images, per embedding size."""

        log_config(self.config)
        self.config.ensure_directories()
        prepared = self.prepared()
        train_images = self._image_stack(prepared, "train")
        test_images = self._image_stack(prepared, "backtest")
        if len(test_images) == 0:
            raise ConfigError("split.validation_fraction", "the backtest partition is empty")
        dims = tuple(self.config.segnet.dims)
        results = self.pool.map(lambda k: self._fit_segnet(prepared, k), dims)
        segnets = {}
        for k, result in zip(dims, results):
            segnets[k] = result.model
            save_checkpoint(result.checkpoint, self.config.output_directory / "checkpoints" / f"segnet-k{k}.mktc")
        pcas = {k: pca_fit(train_images, k) for k in dims}
        frame = compare(test_images, segnets, pcas)
        for row in frame.itertuples(index=False):
            logger.info("k=%s segnet mse=%.6f pca mse=%.6f", row.embedding_dim, row.segnet_mse, row.pca_mse)
        self.repository.write_comparison(frame)
        return frame

    # Benchmark -------------------------------------------------------------------------
    def cmd_benchmark(self) -> pd.DataFrame:
        """One row per model, one column per horizon, MSE on ``benchmark.split``."""

        log_config(self.config)
        self.config.ensure_directories()
        split = self.config.benchmark.split
        horizons = tuple(self.config.labels.horizons)
        for horizon in horizons:
            self.dataset(horizon)
        jobs = [(name, horizon) for name in self.config.benchmark.models for horizon in horizons]

        def _score(job: tuple[str, int]) -> float:
            name, horizon = job
            run = self.train_model(name, horizon)
            self.repository.write_metrics(name, horizon, run.metrics)
            if split not in run.report.test_metrics:
                logger.warning("%s h=%s has no %s samples", name, horizon, split)
                return float("nan")
            return run.report.test_metrics[split]

        scores = self.pool.map(_score, jobs)
        table = pd.DataFrame(
            [
                {"model": name, **{f"h{horizon}": scores[jobs.index((name, horizon))] for horizon in horizons}}
                for name in self.config.benchmark.models
            ],
            columns=["model", *(f"h{horizon}" for horizon in horizons)],
        )
        self.repository.write_benchmark(table)
        return table
