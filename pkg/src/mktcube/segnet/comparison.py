"""Reconstruction-error comparison against PCA, plus embedding probes."""
from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np
import pandas as pd

from ..autodiff import ablate_records
from ..marketdata.types import MarketImage
from .network import MarketSegNet
from .pca import PCAModel, pca_error

COMPARISON_COLUMNS: tuple[str, ...] = ("embedding_dim", "segnet_mse", "pca_mse")
EMBED_CHUNK = 64


def segnet_error(model: MarketSegNet, images: np.ndarray, ablate: bool = False) -> float:
    """Mean per-pixel squared reconstruction error; ``ablate`` discards the pool indices."""

    images = np.asarray(images, dtype=np.float64)
    total, count = 0.0, 0
    for start in range(0, images.shape[0], EMBED_CHUNK):
        chunk = images[start : start + EMBED_CHUNK]
        output = model.reconstruct(chunk, records_transform=ablate_records if ablate else None).data
        total += float(np.sum((output - chunk) ** 2))
        count += chunk.size
    return total / count


def compare(
    test_images: np.ndarray,
    segnet_models: Mapping[int, MarketSegNet],
    pca_models: Mapping[int, PCAModel],
) -> pd.DataFrame:
    """One row per embedding size with both models' test reconstruction error."""

    dims = sorted(set(segnet_models) | set(pca_models))
    rows = []
    for dim in dims:
        rows.append(
            {
                "embedding_dim": dim,
                "segnet_mse": segnet_error(segnet_models[dim], test_images) if dim in segnet_models else np.nan,
                "pca_mse": pca_error(test_images, pca_models[dim]) if dim in pca_models else np.nan,
            }
        )
    return pd.DataFrame(rows, columns=list(COMPARISON_COLUMNS))


def embedding_shift(model: MarketSegNet, image: np.ndarray, drop_row: int) -> float:
    """Relative L2 change of the embedding after deleting one stock row."""

    image = np.asarray(image, dtype=np.float64)
    if not 0 <= drop_row < image.shape[0]:
        raise IndexError(f"row {drop_row} outside an image of {image.shape[0]} stocks")
    full = model.encode(image).embedding.data[0]
    reduced = model.encode(np.delete(image, drop_row, axis=0)).embedding.data[0]
    scale = float(np.linalg.norm(full))
    return float(np.linalg.norm(reduced - full)) / scale if scale > 0 else float(np.linalg.norm(reduced))


def embed_images(model: MarketSegNet, images: Sequence[MarketImage]) -> pd.DataFrame:
    """Embedding table with columns ``date, dim_0 .. dim_{k-1}``."""

    rows = []
    for start in range(0, len(images), EMBED_CHUNK):
        chunk = images[start : start + EMBED_CHUNK]
        codes = model.encode(np.stack([image.values for image in chunk])).embedding.data
        rows.append(codes)
    values = np.vstack(rows) if rows else np.empty((0, model.embedding_dim))
    frame = pd.DataFrame(values, columns=[f"dim_{index}" for index in range(model.embedding_dim)])
    frame.insert(0, "date", [image.date for image in images])
    return frame
