"""Market images: indicators, images, labels, splits, synthetic markets, files."""
from .cubefile import load_cube, save_cube
from .dataset import MarketDataset, PreparedMarket, SampleBatch, prepare_market
from .images import apply_norm, build_image, build_images, compute_panel, fit_norm, stock_order
from .indicators import (
    INDICATOR_MANIFEST,
    INDICATOR_MANIFEST_VERSION,
    compute_indicators,
    fill_fundamentals,
    indicator_names,
    warm_up_days,
)
from .labels import build_label_panel, compute_labels
from .reader import load_stock_series, load_universe, save_stock_series
from .splits import split_dates, split_from_config
from .synthetic import synth_market
from .types import DataSplit, LabelEntry, MarketCube, MarketImage, NormStats, StockSeries

__all__ = [
    "DataSplit",
    "INDICATOR_MANIFEST",
    "INDICATOR_MANIFEST_VERSION",
    "LabelEntry",
    "MarketCube",
    "MarketDataset",
    "MarketImage",
    "NormStats",
    "PreparedMarket",
    "SampleBatch",
    "StockSeries",
    "apply_norm",
    "build_image",
    "build_images",
    "build_label_panel",
    "compute_indicators",
    "compute_labels",
    "compute_panel",
    "fill_fundamentals",
    "fit_norm",
    "indicator_names",
    "load_cube",
    "load_stock_series",
    "load_universe",
    "prepare_market",
    "save_cube",
    "save_stock_series",
    "split_dates",
    "split_from_config",
    "stock_order",
    "synth_market",
    "warm_up_days",
]
