"""Max pooling that remembers its argmax positions, and the matching unpooling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ShapeError
from .tensor import ArrayLike, Function, Tensor, as_tensor


@dataclass(slots=True)
class PoolRecord:
    """Pooled values plus, for each of them, the input position it came from."""

    output: Tensor
    argmax_indices: np.ndarray
    input_length: int
    window: int
    axis: int


class _MaxPool(Function):
    def forward(self, x: np.ndarray, *, window: int, axis: int) -> np.ndarray:
        self.axis = axis
        moved = np.moveaxis(x, axis, -1)
        length = moved.shape[-1]
        pad = (-length) % window
        if pad:
            # -inf never wins a window that holds at least one real element.
            widths = [(0, 0)] * (moved.ndim - 1) + [(0, pad)]
            moved = np.pad(moved, widths, constant_values=-np.inf)
        n_windows = moved.shape[-1] // window
        windows = moved.reshape(*moved.shape[:-1], n_windows, window)
        # argmax returns the first maximum: ties resolve to the lowest index.
        self.indices = windows.argmax(axis=-1) + np.arange(n_windows) * window
        self.input_shape = np.moveaxis(x, axis, -1).shape
        pooled = np.take_along_axis(moved, self.indices, axis=-1)
        return np.moveaxis(pooled, -1, axis)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros(self.input_shape)
        np.put_along_axis(full, self.indices, np.moveaxis(grad, self.axis, -1), axis=-1)
        return (np.moveaxis(full, -1, self.axis),)


def maxpool_with_indices(x: ArrayLike, window: int, axis: int = -1) -> PoolRecord:
    """Non-overlapping max pooling along ``axis``.

    Lengths that are not a multiple of ``window`` are right-padded with
    ``-inf``; recorded indices always point inside the unpadded input.
    """

    if window <= 0:
        raise ValueError(f"pooling window must be positive, got {window}")
    x = as_tensor(x)
    axis = axis % x.ndim
    func = _MaxPool(x)
    pooled = func.forward(x.data, window=window, axis=axis)
    output = Tensor(pooled, requires_grad=x.requires_grad, creator=func if x.requires_grad else None)
    indices = np.moveaxis(func.indices, -1, axis)
    return PoolRecord(output=output, argmax_indices=indices, input_length=x.shape[axis], window=window, axis=axis)


class _Unpool(Function):
    def forward(
        self, values: np.ndarray, *, indices: np.ndarray, target_length: int, axis: int, fill: float
    ) -> np.ndarray:
        self.axis = axis
        self.indices = np.moveaxis(indices, axis, -1)
        moved = np.moveaxis(values, axis, -1)
        out = np.full(moved.shape[:-1] + (target_length,), fill)
        np.put_along_axis(out, self.indices, moved, axis=-1)
        return np.moveaxis(out, -1, axis)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        moved = np.moveaxis(grad, self.axis, -1)
        return (np.moveaxis(np.take_along_axis(moved, self.indices, axis=-1), -1, self.axis),)


def unpool(
    record: PoolRecord,
    target_length: int | None = None,
    values: ArrayLike | None = None,
    fill: float = 0.0,
) -> Tensor:
    """Scatter pooled values back to their recorded positions, ``fill`` elsewhere.

    ``values`` defaults to the record's own output; a decoder passes its own
    feature map of the same shape instead. The zero default suits decoders
    but is only a pooling fixed point for non-negative inputs; pass
    ``fill=-np.inf`` when the result is pooled again.
    """

    target_length = record.input_length if target_length is None else target_length
    values = record.output if values is None else as_tensor(values)
    indices = record.argmax_indices
    if values.shape != indices.shape:
        raise ShapeError(f"unpool values {values.shape} do not match recorded indices {indices.shape}")
    if indices.size and (indices.min() < 0 or indices.max() >= target_length):
        raise ValueError(f"pool indices fall outside [0, {target_length})")
    return _Unpool.apply(values, indices=indices, target_length=target_length, axis=record.axis, fill=fill)


def ablate_records(records: list[PoolRecord]) -> list[PoolRecord]:
    """Replace every recorded argmax with the first position of its window."""

    ablated = []
    for record in records:
        n_windows = record.argmax_indices.shape[record.axis]
        starts = np.arange(n_windows) * record.window
        shape = [1] * record.argmax_indices.ndim
        shape[record.axis] = n_windows
        indices = np.broadcast_to(starts.reshape(shape), record.argmax_indices.shape).copy()
        ablated.append(
            PoolRecord(
                output=record.output,
                argmax_indices=indices,
                input_length=record.input_length,
                window=record.window,
                axis=record.axis,
            )
        )
    return ablated
