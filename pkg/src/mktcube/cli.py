"""Command-line surface: one sub-command per experiment step."""
from __future__ import annotations

import logging
from collections.abc import Callable
from pathlib import Path
from typing import List, Optional, TypeVar

import typer

from .app import bootstrap_service
from .config import ExperimentConfig, load_config
from .exceptions import ConfigError, DataError, FileFormatError, MissingInputError, NumericalError

logger = logging.getLogger(__name__)

EXIT_CONFIG = 1
EXIT_MISSING_INPUT = 2
EXIT_NUMERICAL = 3

T = TypeVar("T")

cli_app = typer.Typer(
    help="Market images, market-attention return models and the MarketSegNet autoencoder.",
    no_args_is_help=True,
    add_completion=False,
)

ConfigOption = typer.Option(None, "--config", "-c", help="key=value configuration file")
SetOption = typer.Option(None, "--set", "-s", help="Override one key, e.g. --set train.epochs=5 (repeatable)")
CheckpointOption = typer.Option(None, "--checkpoint", help="Checkpoint to load instead of the configured one")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level")


def _run(
    config_path: Optional[Path],
    overrides: Optional[List[str]],
    verbose: bool,
    action: Callable[[ExperimentConfig], T],
) -> T:
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        config = load_config(config_path, overrides)
        return action(config)
    except ConfigError as exc:
        typer.echo(f"configuration error: {exc}", err=True)
        raise typer.Exit(EXIT_CONFIG) from exc
    except (MissingInputError, FileFormatError, DataError) as exc:
        typer.echo(f"input error: {exc}", err=True)
        raise typer.Exit(EXIT_MISSING_INPUT) from exc
    except NumericalError as exc:
        typer.echo(f"numerical failure: {exc}", err=True)
        raise typer.Exit(EXIT_NUMERICAL) from exc


@cli_app.command("synth")
def synth_cmd(
    config: Optional[Path] = ConfigOption,
    set_: Optional[List[str]] = SetOption,
    verbose: bool = VerboseOption,
) -> None:
    """Generate a seeded synthetic sector-factor market."""

    path = _run(config, set_, verbose, lambda cfg: bootstrap_service(cfg).cmd_synth())
    typer.echo(f"Synthetic market written to {path}")


@cli_app.command("build-images")
def build_images_cmd(
    config: Optional[Path] = ConfigOption,
    set_: Optional[List[str]] = SetOption,
    verbose: bool = VerboseOption,
) -> None:
    """Compute indicators, normalised market cubes and labels."""

    written = _run(config, set_, verbose, lambda cfg: bootstrap_service(cfg).cmd_build_images())
    for name, path in written.items():
        typer.echo(f"{name}: {path}")


@cli_app.command("train")
def train_cmd(
    config: Optional[Path] = ConfigOption,
    set_: Optional[List[str]] = SetOption,
    verbose: bool = VerboseOption,
) -> None:
    """Train the configured model and store its best checkpoint."""

    report = _run(config, set_, verbose, lambda cfg: bootstrap_service(cfg).cmd_train())
    scores = ", ".join(f"{split} mse={mse:.6f}" for split, mse in report.test_metrics.items())
    typer.echo(f"{report.model} h={report.horizon}: best epoch {report.best_epoch}; {scores or 'no held-out samples'}")
    typer.echo(f"Checkpoint: {report.checkpoint}")


@cli_app.command("evaluate")
def evaluate_cmd(
    config: Optional[Path] = ConfigOption,
    set_: Optional[List[str]] = SetOption,
    checkpoint: Optional[Path] = CheckpointOption,
    split: Optional[str] = typer.Option(None, "--split", help="train, validation or backtest"),
    verbose: bool = VerboseOption,
) -> None:
    """Score a checkpoint and write per-sample predictions."""

    result = _run(config, set_, verbose, lambda cfg: bootstrap_service(cfg).cmd_evaluate(checkpoint, split))
    typer.echo(f"mse={result.mse:.6f} over {result.count} samples ({result.excluded} excluded)")


@cli_app.command("embed")
def embed_cmd(
    config: Optional[Path] = ConfigOption,
    set_: Optional[List[str]] = SetOption,
    checkpoint: Optional[Path] = CheckpointOption,
    verbose: bool = VerboseOption,
) -> None:
    """Write MarketSegNet embeddings for every market image."""

    frame = _run(config, set_, verbose, lambda cfg: bootstrap_service(cfg).cmd_embed(checkpoint))
    typer.echo(f"Embedded {len(frame)} images into {frame.shape[1] - 1} dimensions")


@cli_app.command("compare-pca")
def compare_pca_cmd(
    config: Optional[Path] = ConfigOption,
    set_: Optional[List[str]] = SetOption,
    verbose: bool = VerboseOption,
) -> None:
    """Compare MarketSegNet and PCA reconstruction error per embedding size."""

    frame = _run(config, set_, verbose, lambda cfg: bootstrap_service(cfg).cmd_compare_pca())
    typer.echo(frame.to_string(index=False))


@cli_app.command("benchmark")
def benchmark_cmd(
    config: Optional[Path] = ConfigOption,
    set_: Optional[List[str]] = SetOption,
    verbose: bool = VerboseOption,
) -> None:
    """Train every predictive model at every horizon and tabulate the MSE."""

    table = _run(config, set_, verbose, lambda cfg: bootstrap_service(cfg).cmd_benchmark())
    typer.echo(table.to_string(index=False))
