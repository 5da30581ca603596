"""CSV-based storage for every report an experiment emits."""
from __future__ import annotations

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..exceptions import DataError, MissingInputError
from ..marketdata.labels import LABEL_COLUMNS
from ..marketdata.types import NormStats
from ..models.training import PREDICTION_COLUMNS, EpochMetric, EvaluationResult
from ..segnet.comparison import COMPARISON_COLUMNS

logger = logging.getLogger(__name__)

METRIC_COLUMNS: tuple[str, ...] = ("epoch", "split", "mse")
EVALUATION_COLUMNS: tuple[str, ...] = ("model", "horizon", "split", "mse", "count", "excluded")
NORM_COLUMNS: tuple[str, ...] = ("indicator", "min", "max", "degenerate")
FLOAT_FORMAT = "%.17g"


class CsvRepository:
    """Writes and re-reads the CSV artifacts under one output directory."""

    def __init__(self, base_path: Path) -> None:
        self._base_path = base_path
        self._base_path.mkdir(parents=True, exist_ok=True)

    @property
    def base_path(self) -> Path:
        return self._base_path

    def _path(self, *parts: str) -> Path:
        path = self._base_path.joinpath(*parts)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _write_frame(self, frame: pd.DataFrame, path: Path, columns: Sequence[str]) -> Path:
        missing = [column for column in columns if column not in frame.columns]
        if missing:
            raise ValueError(f"cannot write {path.name}: missing columns {missing}")
        frame.loc[:, list(columns)].to_csv(path, index=False, float_format=FLOAT_FORMAT, date_format="%Y-%m-%d")
        logger.info("Wrote %s", path)
        return path

    def _read_frame(
        self, path: Path, columns: Sequence[str], floats: Sequence[str] = (), **kwargs: Any
    ) -> pd.DataFrame:
        if not path.exists():
            raise MissingInputError(path)
        # integral floats such as 1.0 are written as "1"
        dtype = {column: np.float64 for column in floats} | kwargs.pop("dtype", {})
        frame = pd.read_csv(path, float_precision="round_trip", dtype=dtype, **kwargs)
        missing = [column for column in columns if column not in frame.columns]
        if missing:
            raise DataError(path, f"missing columns {missing}")
        return frame

    # Labels -----------------------------------------------------------------
    def labels_path(self) -> Path:
        return self._path("labels.csv")

    def write_labels(self, labels: pd.DataFrame) -> Path:
        return self._write_frame(labels, self.labels_path(), LABEL_COLUMNS)

    def load_labels(self) -> pd.DataFrame:
        frame = self._read_frame(
            self.labels_path(),
            LABEL_COLUMNS,
            floats=("raw", "scaled"),
            parse_dates=["date"],
            dtype={"stock_id": str},
        )
        frame["valid"] = frame["valid"].astype(bool)
        return frame

    # Normalisation statistics -----------------------------------------------
    def norm_stats_path(self) -> Path:
        return self._path("normstats.csv")

    def write_norm_stats(self, stats: NormStats) -> Path:
        frame = pd.DataFrame(
            {
                "indicator": list(stats.indicator_names),
                "min": stats.minimum,
                "max": stats.maximum,
                "degenerate": [name in stats.degenerate for name in stats.indicator_names],
            }
        )
        return self._write_frame(frame, self.norm_stats_path(), NORM_COLUMNS)

    def load_norm_stats(self) -> NormStats:
        frame = self._read_frame(self.norm_stats_path(), NORM_COLUMNS, floats=("min", "max"))
        names = tuple(frame["indicator"].astype(str))
        degenerate = frame["degenerate"].astype(bool).to_numpy()
        return NormStats(
            indicator_names=names,
            minimum=frame["min"].to_numpy(dtype=np.float64),
            maximum=frame["max"].to_numpy(dtype=np.float64),
            degenerate=tuple(name for name, flag in zip(names, degenerate) if flag),
        )

    # Predictions --------------------------------------------------------------
    def predictions_path(self, model: str, horizon: int, split: str) -> Path:
        return self._path("predictions", f"{model}-h{horizon}-{split}.csv")

    def write_predictions(self, model: str, horizon: int, split: str, rows: pd.DataFrame) -> Path:
        return self._write_frame(rows, self.predictions_path(model, horizon, split), PREDICTION_COLUMNS)

    def load_predictions(self, model: str, horizon: int, split: str) -> pd.DataFrame:
        frame = self._read_frame(
            self.predictions_path(model, horizon, split),
            PREDICTION_COLUMNS,
            floats=("prediction", "label"),
            parse_dates=["date"],
            dtype={"stock_id": str},
        )
        frame["valid"] = frame["valid"].astype(bool)
        return frame

    # Training metrics -----------------------------------------------------------
    def metrics_path(self, model: str, horizon: int) -> Path:
        return self._path("metrics", f"{model}-h{horizon}.csv")

    def write_metrics(self, model: str, horizon: int, metrics: Iterable[EpochMetric]) -> Path:
        path = self.metrics_path(model, horizon)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(METRIC_COLUMNS)
            for metric in metrics:
                writer.writerow([metric.epoch, metric.split, repr(float(metric.mse))])
        logger.info("Wrote %s", path)
        return path

    def load_metrics(self, model: str, horizon: int) -> list[EpochMetric]:
        path = self.metrics_path(model, horizon)
        if not path.exists():
            raise MissingInputError(path)
        metrics: list[EpochMetric] = []
        with path.open("r", encoding="utf-8", newline="") as handle:
            for row in csv.DictReader(handle):
                metrics.append(EpochMetric(epoch=int(row["epoch"]), split=row["split"], mse=float(row["mse"])))
        return metrics

    # Evaluation summaries ------------------------------------------------------
    def evaluation_path(self, model: str, horizon: int, split: str) -> Path:
        return self._path("evaluation", f"{model}-h{horizon}-{split}.csv")

    def write_evaluation(self, model: str, horizon: int, split: str, result: EvaluationResult) -> Path:
        path = self.evaluation_path(model, horizon, split)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(EVALUATION_COLUMNS)
            writer.writerow([model, horizon, split, repr(float(result.mse)), result.count, result.excluded])
        logger.info("Wrote %s", path)
        return path

    def load_evaluation(self, model: str, horizon: int, split: str) -> dict[str, Any]:
        frame = self._read_frame(self.evaluation_path(model, horizon, split), EVALUATION_COLUMNS, dtype={"model": str})
        row = frame.iloc[0]
        return {
            "model": row["model"],
            "horizon": int(row["horizon"]),
            "split": row["split"],
            "mse": float(row["mse"]),
            "count": int(row["count"]),
            "excluded": int(row["excluded"]),
        }

    # Embeddings and reconstruction comparison ----------------------------------
    def embeddings_path(self, embedding_dim: int) -> Path:
        return self._path("embeddings", f"segnet-k{embedding_dim}.csv")

    def write_embeddings(self, embedding_dim: int, frame: pd.DataFrame) -> Path:
        columns = ["date", *(f"dim_{index}" for index in range(embedding_dim))]
        return self._write_frame(frame, self.embeddings_path(embedding_dim), columns)

    def load_embeddings(self, embedding_dim: int) -> pd.DataFrame:
        columns = ["date", *(f"dim_{index}" for index in range(embedding_dim))]
        return self._read_frame(self.embeddings_path(embedding_dim), columns, floats=columns[1:], parse_dates=["date"])

    def comparison_path(self) -> Path:
        return self._path("comparison.csv")

    def write_comparison(self, frame: pd.DataFrame) -> Path:
        return self._write_frame(frame, self.comparison_path(), COMPARISON_COLUMNS)

    def load_comparison(self) -> pd.DataFrame:
        return self._read_frame(self.comparison_path(), COMPARISON_COLUMNS, floats=("segnet_mse", "pca_mse"))

    # Benchmark table ------------------------------------------------------------
    def benchmark_path(self) -> Path:
        return self._path("benchmark.csv")

    def write_benchmark(self, frame: pd.DataFrame) -> Path:
        return self._write_frame(frame, self.benchmark_path(), list(frame.columns))

    def load_benchmark(self) -> pd.DataFrame:
        return self._read_frame(self.benchmark_path(), ("model",), dtype={"model": str})

    # Run reports ------------------------------------------------------------------
    def report_path(self, model: str, horizon: int) -> Path:
        return self._path("reports", f"{model}-h{horizon}.json")

    def write_report(self, model: str, horizon: int, report: Any) -> Path:
        path = self.report_path(model, horizon)
        payload = asdict(report) if hasattr(report, "__dataclass_fields__") else report
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str), encoding="utf-8")
        logger.info("Wrote %s", path)
        return path

    def load_report(self, model: str, horizon: int) -> dict[str, Any]:
        path = self.report_path(model, horizon)
        if not path.exists():
            raise MissingInputError(path)
        return json.loads(path.read_text(encoding="utf-8"))

    def list_reports(self) -> list[Path]:
        return sorted((self._base_path / "reports").glob("*.json"))
