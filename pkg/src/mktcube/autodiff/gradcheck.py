"""Central finite-difference oracle for analytic gradients."""
from __future__ import annotations

from collections.abc import Callable, Mapping

import numpy as np

from .tensor import Tensor, backward


def numerical_gradient(loss_fn: Callable[[], Tensor], param: Tensor, h: float = 1e-6) -> np.ndarray:
    """Estimate d loss / d param by central differences, one entry at a time."""

    original = param.data
    estimate = np.zeros_like(original)
    for flat_index in range(original.size):
        index = np.unravel_index(flat_index, original.shape)
        plus = original.copy()
        plus[index] += h
        param.data = plus
        loss_plus = loss_fn().item()
        minus = original.copy()
        minus[index] -= h
        param.data = minus
        loss_minus = loss_fn().item()
        estimate[index] = (loss_plus - loss_minus) / (2.0 * h)
    param.data = original
    return estimate


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> float:
    """Largest |a - n| / max(|a|, |n|, floor) over all entries."""

    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    h: float = 1e-6,
) -> dict[str, float]:
    """Compare backprop against finite differences for every named parameter."""

    for param in params.values():
        param.zero_grad()
    backward(loss_fn())
    errors = {}
    for name, param in params.items():
        analytic = param.grad if param.grad is not None else np.zeros_like(param.data)
        errors[name] = relative_error(analytic, numerical_gradient(loss_fn, param, h))
    return errors
