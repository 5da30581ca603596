"""Configuration settings for market cube experiments."""
from __future__ import annotations

import dataclasses
import logging
import typing
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Mapping

import numpy as np

from .exceptions import ConfigError, MissingInputError

logger = logging.getLogger(__name__)

ModelName = Literal["lr", "svr", "ffnn", "lstm-rnn", "ma", "ma-rnn", "segnet"]
MODEL_NAMES: tuple[str, ...] = typing.get_args(ModelName)
PREDICTIVE_MODELS: tuple[str, ...] = ("lr", "svr", "ffnn", "lstm-rnn", "ma", "ma-rnn")

# Trading-day counts of the reference history: 3265 train, 754 validation, 504 backtest.
DEFAULT_TRAIN_FRACTION = 3265 / 4523
DEFAULT_VALIDATION_FRACTION = 754 / 4523


@dataclass(slots=True)
class SynthConfig:
    """Sector-factor generator used in place of proprietary constituent data."""

    m_stocks: int = 20
    n_sectors: int = 4
    subsectors_per_sector: int = 2
    n_days: int = 600
    start_date: str = "2000-01-03"
    factor_sigma: float = 0.01
    """Daily standard deviation of the market and sector factors."""

    idio_sigma: float = 0.005
    beta_market_min: float = 0.5
    beta_market_max: float = 1.5
    beta_sector_min: float = 0.3
    beta_sector_max: float = 1.0
    lead_lag_strength: float = 1.0
    """Loading of each sector factor on yesterday's shock of the sector's first stock.

    At 1.0 the lagged term has the same scale as the sector factor.
    """

    cross_sector_nonlinearity: float = 0.0
    """Strength of the |factor| coupling between neighbouring sectors."""

    fundamental_period: int = 63
    """Trading days between fundamental observations (one quarter)."""


@dataclass(slots=True)
class DataConfig:
    """Where raw series come from and how fundamentals are densified."""

    source: Literal["synth", "csv"] = "synth"
    universe_file: str = "universe.csv"
    prices_dir: str = "prices"
    fundamentals_dir: str = "fundamentals"
    fill_mode: Literal["carry-forward", "backfill"] = "carry-forward"


@dataclass(slots=True)
class IndicatorConfig:
    """Technical-indicator parameters (industry-standard defaults)."""

    columns: tuple[str, ...] = ()
    """Subset of the indicator manifest to keep; empty keeps all 40."""

    rsi_period: int = 14
    macd_fast: int = 12
    macd_slow: int = 26
    macd_signal: int = 9
    roc_period: int = 10
    momentum_period: int = 10
    boll_period: int = 20
    boll_width: float = 2.0
    dmi_period: int = 14
    volume_window: int = 20
    volatility_window: int = 10


@dataclass(slots=True)
class SplitConfig:
    """Chronological train/validation/backtest boundaries."""

    train_fraction: float = DEFAULT_TRAIN_FRACTION
    validation_fraction: float = DEFAULT_VALIDATION_FRACTION
    train_end: str = ""
    """First validation date (ISO); overrides the fractions when set."""

    validation_end: str = ""
    """First backtest date (ISO); overrides the fractions when set."""


@dataclass(slots=True)
class LabelConfig:
    horizons: tuple[int, ...] = (1, 5, 15, 30)
    sigma_window: int = 10
    sigma_floor: float = 1e-8


@dataclass(slots=True)
class TrainConfig:
    """Mini-batch Adam protocol shared by every gradient-trained model."""

    lookback: int = 10
    batch_size: int = 10
    learning_rate: float = 0.001
    clip_norm: float = 5.0
    epochs: int = 30
    patience: int = 10
    init_scale: float = 0.1
    """Half-width of the uniform initialisation interval."""


@dataclass(slots=True)
class MAConfig:
    kernels: int = 192
    embedding_size: int = 100
    attention_size: int = 32
    market_dim: int = 40
    head_hidden: int = 50


@dataclass(slots=True)
class MARNNConfig:
    lstm_cell: int = 32
    stock_dim: int = 40
    fusion_hidden: tuple[int, ...] = (100, 50)


@dataclass(slots=True)
class BaselineConfig:
    ridge: float = 1e-8
    svr_c: float = 0.3
    svr_epsilon: float = 0.1
    svr_steps: int = 3000
    svr_learning_rate: float = 0.5
    ffnn_hidden: tuple[int, ...] = (50, 50)
    lstm_cell: int = 25


@dataclass(slots=True)
class SegNetConfig:
    channels: tuple[int, ...] = (16, 32, 64)
    kernel_size: int = 3
    pool_window: int = 2
    grid_rows: int = 32
    steps: int = 2000
    batch_size: int = 10
    dims: tuple[int, ...] = (16, 32, 64, 128)


@dataclass(slots=True)
class BenchmarkConfig:
    split: Literal["validation", "backtest"] = "backtest"
    models: tuple[str, ...] = PREDICTIVE_MODELS


@dataclass(slots=True)
class ExperimentConfig:
    """Top-level configuration for every ``mktcube`` command."""

    seed: int = 7
    model: ModelName = "ma-rnn"
    horizon: int = 1
    embedding_dim: int = 32
    data_directory: Path = field(default_factory=lambda: Path("data"))
    output_directory: Path = field(default_factory=lambda: Path("runs"))
    checkpoint: str = ""
    """Explicit checkpoint path for evaluate/embed; empty derives it from model and horizon."""

    synth: SynthConfig = field(default_factory=SynthConfig)
    data: DataConfig = field(default_factory=DataConfig)
    indicators: IndicatorConfig = field(default_factory=IndicatorConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    labels: LabelConfig = field(default_factory=LabelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    ma: MAConfig = field(default_factory=MAConfig)
    marnn: MARNNConfig = field(default_factory=MARNNConfig)
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    segnet: SegNetConfig = field(default_factory=SegNetConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)

    def ensure_directories(self) -> None:
        """Create the data and output directories used by the commands."""

        self.data_directory.mkdir(parents=True, exist_ok=True)
        self.output_directory.mkdir(parents=True, exist_ok=True)

    def checkpoint_path(self, model: str | None = None, horizon: int | None = None) -> Path:
        if self.checkpoint and model is None and horizon is None:
            return Path(self.checkpoint)
        model = model or self.model
        if model == "segnet":
            return self.output_directory / "checkpoints" / f"segnet-k{self.embedding_dim}.mktc"
        horizon = self.horizon if horizon is None else horizon
        return self.output_directory / "checkpoints" / f"{model}-h{horizon}.mktc"

    def rng(self, stream: str) -> np.random.Generator:
        """Independent generator for a named randomness stream."""

        return np.random.default_rng(np.random.SeedSequence([self.seed, zlib.crc32(stream.encode("utf-8"))]))

    def as_items(self) -> dict[str, str]:
        """Flatten to ``key=value`` strings, dotted for nested sections."""

        items: dict[str, str] = {}
        for item in dataclasses.fields(self):
            value = getattr(self, item.name)
            if dataclasses.is_dataclass(value):
                for sub in dataclasses.fields(value):
                    items[f"{item.name}.{sub.name}"] = format_value(getattr(value, sub.name))
            else:
                items[item.name] = format_value(value)
        return items

    def validate(self) -> None:
        if self.horizon not in self.labels.horizons:
            raise ConfigError("horizon", f"{self.horizon} is not one of labels.horizons {self.labels.horizons}")
        if self.embedding_dim <= 0:
            raise ConfigError("embedding_dim", "must be positive")
        if self.synth.m_stocks < self.synth.n_sectors or self.synth.n_sectors < 1:
            raise ConfigError("synth.m_stocks", "need m_stocks >= n_sectors >= 1")
        for key, value in (
            ("train.lookback", self.train.lookback),
            ("train.batch_size", self.train.batch_size),
            ("train.epochs", self.train.epochs),
        ):
            if value <= 0:
                raise ConfigError(key, "must be positive")
        if self.train.learning_rate < 0:
            raise ConfigError("train.learning_rate", "must be non-negative")
        if not 0 < self.split.train_fraction < 1 or not 0 <= self.split.validation_fraction < 1:
            raise ConfigError("split.train_fraction", "fractions must lie in (0, 1)")
        if self.split.train_fraction + self.split.validation_fraction >= 1:
            raise ConfigError("split.validation_fraction", "train + validation fractions must leave a backtest")
        unknown = [name for name in self.benchmark.models if name not in PREDICTIVE_MODELS]
        if unknown:
            raise ConfigError("benchmark.models", f"unknown models {unknown}")


def format_value(value: Any) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(str(part) for part in value)
    return str(value)


def _coerce(key: str, raw: str, hint: Any) -> Any:
    origin = typing.get_origin(hint)
    try:
        if origin is Literal:
            if raw not in typing.get_args(hint):
                raise ConfigError(key, f"{raw!r} is not one of {typing.get_args(hint)}")
            return raw
        if origin is tuple:
            (element, *_) = typing.get_args(hint)
            parts = [part.strip() for part in raw.split(",") if part.strip()]
            return tuple(_coerce(key, part, element) for part in parts)
        if hint is bool:
            lowered = raw.strip().lower()
            if lowered not in {"true", "false", "1", "0", "yes", "no"}:
                raise ConfigError(key, f"{raw!r} is not a boolean")
            return lowered in {"true", "1", "yes"}
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint is Path:
            return Path(raw)
        return raw
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key, f"cannot parse {raw!r}: {exc}") from exc


def _hints(cls: type) -> dict[str, Any]:
    module = __import__(cls.__module__, fromlist=["_"])
    return typing.get_type_hints(cls, globalns=vars(module))


def apply_overrides(config: ExperimentConfig, items: Mapping[str, str]) -> ExperimentConfig:
    """Set dotted ``key=value`` pairs on ``config``; unknown keys are rejected."""

    top_hints = _hints(ExperimentConfig)
    for key, raw in items.items():
        section_name, _, field_name = key.partition(".")
        if not field_name:
            if key not in top_hints or dataclasses.is_dataclass(getattr(config, key, None)):
                raise ConfigError(key, "unknown configuration key")
            setattr(config, key, _coerce(key, raw.strip(), top_hints[key]))
            continue
        section = getattr(config, section_name, None)
        if not dataclasses.is_dataclass(section):
            raise ConfigError(key, "unknown configuration section")
        section_hints = _hints(type(section))
        if field_name not in section_hints:
            raise ConfigError(key, "unknown configuration key")
        setattr(section, field_name, _coerce(key, raw.strip(), section_hints[field_name]))
    return config


def parse_assignments(lines: list[str], origin: str) -> dict[str, str]:
    items: dict[str, str] = {}
    for number, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{origin}:{number}", f"expected key=value, got {line.strip()!r}")
        items[key.strip()] = value.strip()
    return items


def load_config(path: Path | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Build an ``ExperimentConfig`` from a key=value file plus ``--set`` overrides."""

    config = ExperimentConfig()
    if path is not None:
        if not path.exists():
            raise MissingInputError(path, "configuration file not found")
        apply_overrides(config, parse_assignments(path.read_text(encoding="utf-8").splitlines(), str(path)))
    if overrides:
        apply_overrides(config, parse_assignments(list(overrides), "--set"))
    config.validate()
    return config


def log_config(config: ExperimentConfig) -> None:
    for key, value in config.as_items().items():
        logger.info("config %s=%s", key, value)


DEFAULT_CONFIG = ExperimentConfig()
