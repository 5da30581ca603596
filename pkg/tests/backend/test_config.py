from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from mktcube.config import (
    DEFAULT_TRAIN_FRACTION,
    ExperimentConfig,
    apply_overrides,
    format_value,
    load_config,
    parse_assignments,
)
from mktcube.exceptions import ConfigError, MissingInputError


def test_defaults_follow_the_reference_protocol() -> None:
    config = ExperimentConfig()

    assert config.train.lookback == 10
    assert config.train.batch_size == 10
    assert config.train.learning_rate == 0.001
    assert config.train.init_scale == 0.1
    assert config.ma.kernels == 192
    assert config.marnn.lstm_cell == 32
    assert config.labels.horizons == (1, 5, 15, 30)
    assert config.segnet.dims == (16, 32, 64, 128)
    assert config.synth.lead_lag_strength == 1.0
    assert config.synth.cross_sector_nonlinearity == 0.0
    assert round(DEFAULT_TRAIN_FRACTION * 4523) == 3265


def test_overrides_coerce_to_the_field_types() -> None:
    config = apply_overrides(
        ExperimentConfig(),
        {
            "seed": "11",
            "train.learning_rate": "0.01",
            "marnn.fusion_hidden": "8, 4",
            "data.fill_mode": "backfill",
            "output_directory": "elsewhere",
        },
    )

    assert config.seed == 11
    assert config.train.learning_rate == 0.01
    assert config.marnn.fusion_hidden == (8, 4)
    assert config.data.fill_mode == "backfill"
    assert config.output_directory == Path("elsewhere")


@pytest.mark.parametrize(
    ("key", "value"),
    [
        ("train.nonsense", "1"),
        ("nosection.key", "1"),
        ("train", "1"),
        ("train.epochs", "many"),
        ("data.fill_mode", "nearest"),
    ],
)
def test_bad_overrides_raise_config_error(key: str, value: str) -> None:
    with pytest.raises(ConfigError) as excinfo:
        apply_overrides(ExperimentConfig(), {key: value})

    assert excinfo.value.key == key


def test_parse_assignments_skips_comments_and_blank_lines() -> None:
    lines = ["# experiment", "", "seed = 3  # inline", "train.epochs=4"]

    assert parse_assignments(lines, "exp.cfg") == {"seed": "3", "train.epochs": "4"}


def test_parse_assignments_reports_the_line() -> None:
    with pytest.raises(ConfigError, match="exp.cfg:2"):
        parse_assignments(["seed=1", "epochs 4"], "exp.cfg")


def test_load_config_applies_file_then_overrides(tmp_path: Path) -> None:
    path = tmp_path / "exp.cfg"
    path.write_text("seed=3\ntrain.epochs=4\n", encoding="utf-8")

    config = load_config(path, ["train.epochs=6"])

    assert config.seed == 3
    assert config.train.epochs == 6


def test_load_config_missing_file(tmp_path: Path) -> None:
    with pytest.raises(MissingInputError):
        load_config(tmp_path / "absent.cfg")


@pytest.mark.parametrize(
    "override",
    [
        "horizon=2",
        "embedding_dim=0",
        "train.batch_size=0",
        "train.learning_rate=-1",
        "split.train_fraction=0.9",
        "benchmark.models=ma,segnet",
        "synth.n_sectors=30",
    ],
)
def test_validate_rejects_inconsistent_settings(override: str) -> None:
    with pytest.raises(ConfigError):
        load_config(None, [override])


def test_format_value_round_trips_through_overrides() -> None:
    original = ExperimentConfig()
    original.segnet.channels = (3, 5, 7)
    original.train.learning_rate = 1.0 / 3.0

    rebuilt = apply_overrides(ExperimentConfig(), original.as_items())

    assert format_value((3, 5, 7)) == "3,5,7"
    assert rebuilt.segnet.channels == (3, 5, 7)
    assert rebuilt.train.learning_rate == original.train.learning_rate
    assert rebuilt.as_items() == original.as_items()


def test_rng_streams_are_independent_and_reproducible() -> None:
    config = ExperimentConfig(seed=5)

    first = config.rng("init/ma/h1").normal(size=4)
    again = config.rng("init/ma/h1").normal(size=4)
    other = config.rng("init/ma/h5").normal(size=4)
    reseeded = ExperimentConfig(seed=6).rng("init/ma/h1").normal(size=4)

    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, other)
    assert not np.array_equal(first, reseeded)


def test_checkpoint_paths(tmp_path: Path) -> None:
    config = apply_overrides(ExperimentConfig(), {"output_directory": str(tmp_path), "embedding_dim": "16"})

    assert config.checkpoint_path("ma", 5) == tmp_path / "checkpoints" / "ma-h5.mktc"
    assert config.checkpoint_path("segnet") == tmp_path / "checkpoints" / "segnet-k16.mktc"
    config.checkpoint = str(tmp_path / "explicit.mktc")
    assert config.checkpoint_path() == tmp_path / "explicit.mktc"
