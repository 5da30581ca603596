"""PCA baseline for market-image compression, via ``numpy.linalg.svd``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(slots=True)
class PCAModel:
    """Training mean plus the top-k principal axes of the flattened images."""

    mean: np.ndarray
    axes: np.ndarray
    """(k, m * n) orthonormal rows."""

    singular_values: np.ndarray
    image_shape: tuple[int, int]

    @property
    def k(self) -> int:
        return int(self.axes.shape[0])

    def transform(self, images: np.ndarray) -> np.ndarray:
        flat = _flatten(images, self.image_shape)
        return (flat - self.mean) @ self.axes.T

    def inverse_transform(self, codes: np.ndarray) -> np.ndarray:
        flat = np.atleast_2d(codes) @ self.axes + self.mean
        return flat.reshape(-1, *self.image_shape)


def _flatten(images: np.ndarray, image_shape: tuple[int, int] | None = None) -> np.ndarray:
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 2:
        images = images[None]
    if images.ndim != 3:
        raise ValueError(f"expected (count, m, n) images, got {images.shape}")
    if image_shape is not None and images.shape[1:] != image_shape:
        raise ValueError(f"images are {images.shape[1:]}, the model was fitted on {image_shape}")
    return images.reshape(images.shape[0], -1)


def pca_fit(train_images: np.ndarray, k: int) -> PCAModel:
    """Fit a k-component PCA on (count, m, n) training images."""

    flat = _flatten(train_images)
    count, pixels = flat.shape
    if k <= 0:
        raise ValueError("k must be positive")
    if k > count:
        raise ValueError(f"k={k} exceeds the {count} training images")
    if k > pixels:
        raise ValueError(f"k={k} exceeds the {pixels} pixels per image")
    mean = flat.mean(axis=0)
    _, singular, vt = np.linalg.svd(flat - mean, full_matrices=False)
    return PCAModel(
        mean=mean,
        axes=vt[:k].copy(),
        singular_values=singular.copy(),
        image_shape=(int(np.shape(train_images)[-2]), int(np.shape(train_images)[-1])),
    )


def pca_roundtrip(images: np.ndarray, model: PCAModel) -> np.ndarray:
    """Project onto the principal axes and map back; keeps the input's shape."""

    images = np.asarray(images, dtype=np.float64)
    reconstruction = model.inverse_transform(model.transform(images))
    return reconstruction.reshape(images.shape)


def pca_error(images: np.ndarray, model: PCAModel) -> float:
    """Mean per-pixel squared reconstruction error."""

    images = np.asarray(images, dtype=np.float64)
    residual = images - pca_roundtrip(images, model)
    return float(np.mean(residual * residual))
