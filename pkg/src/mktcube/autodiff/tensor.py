"""Dense float64 tensors with define-by-run reverse-mode differentiation."""
from __future__ import annotations

from typing import Any, Sequence, Union

import numpy as np

from ..exceptions import ShapeError

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence[float]]


class Function:
    """A differentiable operation recorded on the graph.

    Subclasses implement ``forward`` over raw arrays and ``backward``, which
    maps the gradient of the output to one gradient (or ``None``) per input.
    """

    def __init__(self, *inputs: Tensor) -> None:
        self.inputs = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: ArrayLike, **kwargs: Any) -> Tensor:
        tensors = tuple(as_tensor(item) for item in inputs)
        func = cls(*tensors)
        out_data = func.forward(*(tensor.data for tensor in tensors), **kwargs)
        requires_grad = any(tensor.requires_grad for tensor in tensors)
        return Tensor(out_data, requires_grad=requires_grad, creator=func if requires_grad else None)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes numpy broadcasting added to reach ``shape``."""

    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """An n-dimensional float64 array participating in the differentiation graph."""

    __slots__ = ("data", "requires_grad", "grad", "creator", "name")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        creator: Function | None = None,
        name: str | None = None,
    ) -> None:
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.creator = creator
        self.name = name

    @classmethod
    def parameter(cls, values: np.ndarray, name: str | None = None) -> Tensor:
        """Leaf tensor owning a private copy of ``values``."""

        return cls(np.array(values, dtype=np.float64, copy=True), requires_grad=True, name=name)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def backward(self) -> None:
        backward(self)

    # Arithmetic. The implementations live in ``functional``.
    def __add__(self, other: ArrayLike) -> Tensor:
        from .functional import add

        return add(self, other)

    def __radd__(self, other: ArrayLike) -> Tensor:
        from .functional import add

        return add(other, self)

    def __sub__(self, other: ArrayLike) -> Tensor:
        from .functional import sub

        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> Tensor:
        from .functional import sub

        return sub(other, self)

    def __mul__(self, other: ArrayLike) -> Tensor:
        from .functional import mul

        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> Tensor:
        from .functional import mul

        return mul(other, self)

    def __neg__(self) -> Tensor:
        from .functional import mul

        return mul(self, -1.0)

    def __truediv__(self, other: float | int) -> Tensor:
        from .functional import mul

        if isinstance(other, Tensor):
            raise TypeError("division is only supported by a constant")
        return mul(self, 1.0 / float(other))

    def __matmul__(self, other: ArrayLike) -> Tensor:
        from .functional import matmul

        return matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        from .functional import getitem

        return getitem(self, index)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        from .functional import tensor_sum

        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        from .functional import mean

        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> Tensor:
        from .functional import reshape

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        from .functional import transpose

        return transpose(self, axes or None)


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node.creator is not None:
            for parent in reversed(node.creator.inputs):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every leaf the scalar ``loss`` depends on.

    Leaf gradients accumulate across calls; call ``zero_grad`` between steps.
    """

    if loss.data.size != 1 or loss.ndim > 1:
        raise ShapeError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if node.creator is None:
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue
        input_grads = node.creator.backward(grad)
        for parent, parent_grad in zip(node.creator.inputs, input_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            if parent_grad.shape != parent.shape:
                raise ShapeError(
                    f"{type(node.creator).__name__} produced gradient {parent_grad.shape} for input {parent.shape}"
                )
            key = id(parent)
            pending[key] = parent_grad if key not in pending else pending[key] + parent_grad
