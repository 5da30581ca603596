"""Pytest configuration and shared fixtures."""
from __future__ import annotations

import sys
from pathlib import Path

import pytest

# Ensure the project source directory is importable when running tests without installation.
PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from mktcube.config import ExperimentConfig, apply_overrides  # noqa: E402
from mktcube.marketdata import prepare_market, synth_market  # noqa: E402

SMALL_OVERRIDES = {
    "synth.m_stocks": "8",
    "synth.n_sectors": "2",
    "synth.n_days": "160",
    "train.epochs": "2",
    "train.batch_size": "8",
    "train.lookback": "4",
    "ma.kernels": "6",
    "ma.embedding_size": "5",
    "ma.attention_size": "4",
    "ma.market_dim": "6",
    "ma.head_hidden": "5",
    "marnn.lstm_cell": "4",
    "marnn.stock_dim": "5",
    "marnn.fusion_hidden": "6,4",
    "baselines.ffnn_hidden": "6,6",
    "baselines.lstm_cell": "4",
    "baselines.svr_steps": "200",
    "segnet.channels": "4,6,8",
    "segnet.grid_rows": "4",
    "segnet.steps": "5",
    "segnet.dims": "2,4",
    "labels.horizons": "1,5",
}


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale reproduction tests")


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: desk-scale training runs, enabled with --runslow")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_config(tmp_path: Path) -> ExperimentConfig:
    config = apply_overrides(ExperimentConfig(), SMALL_OVERRIDES)
    config.data_directory = tmp_path / "data"
    config.output_directory = tmp_path / "runs"
    config.validate()
    return config


@pytest.fixture
def small_market(small_config: ExperimentConfig):
    return synth_market(small_config.rng("data"), small_config.synth)


@pytest.fixture
def prepared(small_market, small_config: ExperimentConfig):
    return prepare_market(small_market, small_config)
