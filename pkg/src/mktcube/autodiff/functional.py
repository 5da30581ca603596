"""Differentiable primitives and the layer operations built on them."""
from __future__ import annotations

from typing import Any, NamedTuple, Sequence

import numpy as np

from ..exceptions import ShapeError
from .tensor import ArrayLike, Function, Tensor, as_tensor, unbroadcast


# ---------------------------------------------------------------------------
# Elementwise
# ---------------------------------------------------------------------------


class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a + b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.inputs
        return unbroadcast(grad, a.shape), unbroadcast(grad, b.shape)


class Sub(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a - b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.inputs
        return unbroadcast(grad, a.shape), unbroadcast(-grad, b.shape)


class Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a * b

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.inputs
        return unbroadcast(grad * b.data, a.shape), unbroadcast(grad * a.data, b.shape)


class Tanh(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad * (1.0 - self.out * self.out),)


class Sigmoid(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self.out = 0.5 * (1.0 + np.tanh(0.5 * x))
        return self.out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad * self.out * (1.0 - self.out),)


class Relu(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self.mask = x > 0.0
        return np.where(self.mask, x, 0.0)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        return (np.where(self.mask, grad, 0.0),)


class Exp(Function):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self.out = np.exp(x)
        return self.out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad * self.out,)


class Softmax(Function):
    def forward(self, x: np.ndarray, *, axis: int) -> np.ndarray:
        self.axis = axis
        shifted = np.exp(x - x.max(axis=axis, keepdims=True))
        self.out = shifted / shifted.sum(axis=axis, keepdims=True)
        return self.out

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        inner = (grad * self.out).sum(axis=self.axis, keepdims=True)
        return (self.out * (grad - inner),)


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    return Add.apply(a, b)


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    return Sub.apply(a, b)


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    return Mul.apply(a, b)


def tanh(x: ArrayLike) -> Tensor:
    return Tanh.apply(x)


def sigmoid(x: ArrayLike) -> Tensor:
    return Sigmoid.apply(x)


def relu(x: ArrayLike) -> Tensor:
    return Relu.apply(x)


def exp(x: ArrayLike) -> Tensor:
    return Exp.apply(x)


def softmax(x: ArrayLike, axis: int = -1) -> Tensor:
    return Softmax.apply(x, axis=axis)


# ---------------------------------------------------------------------------
# Contractions and structure
# ---------------------------------------------------------------------------


def _parse_subscripts(subscripts: str) -> tuple[str, str, str]:
    try:
        inputs, output = subscripts.replace(" ", "").split("->")
        left, right = inputs.split(",")
    except ValueError as exc:
        raise ValueError(f"einsum expects 'ab,bc->ac' style subscripts, got {subscripts!r}") from exc
    for operand in (left, right, output):
        if len(set(operand)) != len(operand) or (operand and not operand.isalpha()):
            raise ValueError(f"unsupported einsum operand {operand!r} in {subscripts!r}")
    if not set(output) <= set(left) | set(right):
        raise ValueError(f"einsum output indices must come from the operands: {subscripts!r}")
    for mine, other in ((left, right), (right, left)):
        for index in mine:
            if index not in other and index not in output:
                raise ValueError(f"index {index!r} is reduced within a single operand in {subscripts!r}")
    return left, right, output


class Einsum(Function):
    """Two-operand einsum whose gradients are einsums of the same shape."""

    def forward(self, a: np.ndarray, b: np.ndarray, *, subscripts: str) -> np.ndarray:
        self.left, self.right, self.output = _parse_subscripts(subscripts)
        try:
            return np.einsum(subscripts, a, b, optimize=True)
        except ValueError as exc:
            raise ShapeError(f"einsum {subscripts!r} on shapes {a.shape} and {b.shape}: {exc}") from exc

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, np.ndarray | None]:
        a, b = self.inputs
        grad_a = grad_b = None
        if a.requires_grad:
            grad_a = np.einsum(f"{self.output},{self.right}->{self.left}", grad, b.data, optimize=True)
        if b.requires_grad:
            grad_b = np.einsum(f"{self.output},{self.left}->{self.right}", grad, a.data, optimize=True)
        return grad_a, grad_b


def einsum(subscripts: str, a: ArrayLike, b: ArrayLike) -> Tensor:
    return Einsum.apply(a, b, subscripts=subscripts)


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Matrix product for 1-D/2-D/3-D left operands and a 2-D right operand."""

    a, b = as_tensor(a), as_tensor(b)
    if b.ndim != 2 or a.ndim not in (1, 2, 3):
        raise ShapeError(f"matmul supports (..., k) @ (k, n), got {a.shape} @ {b.shape}")
    lead = "bm"[: a.ndim - 1]
    return einsum(f"{lead}k,kn->{lead}n", a, b)


class GetItem(Function):
    def forward(self, x: np.ndarray, *, index: Any) -> np.ndarray:
        self.index = index
        self.advanced = _is_advanced_index(index)
        return np.array(x[index], dtype=np.float64, copy=True)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        (x,) = self.inputs
        full = np.zeros_like(x.data)
        if self.advanced:
            np.add.at(full, self.index, grad)
        else:
            full[self.index] += grad
        return (full,)


def _is_advanced_index(index: Any) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return any(isinstance(part, (list, np.ndarray)) for part in parts)


def getitem(x: ArrayLike, index: Any) -> Tensor:
    return GetItem.apply(x, index=index)


class Concat(Function):
    def forward(self, *arrays: np.ndarray, axis: int) -> np.ndarray:
        self.axis = axis
        self.sizes = [array.shape[axis] for array in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray, ...]:
        cuts = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, cuts, axis=self.axis))


class Stack(Function):
    def forward(self, *arrays: np.ndarray, axis: int) -> np.ndarray:
        self.axis = axis
        return np.stack(arrays, axis=axis)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray, ...]:
        moved = np.moveaxis(grad, self.axis, 0)
        return tuple(np.array(part) for part in moved)


def concat(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def stack(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    return Stack.apply(*tensors, axis=axis)


class Sum(Function):
    def forward(self, x: np.ndarray, *, axis: int | tuple[int, ...] | None, keepdims: bool) -> np.ndarray:
        self.axis = axis
        self.keepdims = keepdims
        return np.asarray(x.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        (x,) = self.inputs
        if self.axis is not None and not self.keepdims:
            axes = (self.axis,) if isinstance(self.axis, int) else self.axis
            grad = np.expand_dims(grad, tuple(axis % x.ndim for axis in axes))
        return (np.broadcast_to(grad, x.shape).copy(),)


def tensor_sum(x: ArrayLike, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    return Sum.apply(x, axis=axis, keepdims=keepdims)


def mean(x: ArrayLike, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([x.shape[a] for a in axes]))
    return mul(tensor_sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


class Reshape(Function):
    def forward(self, x: np.ndarray, *, shape: tuple[int, ...]) -> np.ndarray:
        return x.reshape(shape)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad.reshape(self.inputs[0].shape),)


class Transpose(Function):
    def forward(self, x: np.ndarray, *, axes: tuple[int, ...] | None) -> np.ndarray:
        self.axes = axes if axes is not None else tuple(reversed(range(x.ndim)))
        return np.transpose(x, self.axes)

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray]:
        return (np.transpose(grad, np.argsort(self.axes)),)


def reshape(x: ArrayLike, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(x, shape=tuple(shape))


def transpose(x: ArrayLike, axes: Sequence[int] | None = None) -> Tensor:
    return Transpose.apply(x, axes=tuple(axes) if axes is not None else None)


def mse(prediction: Tensor, target: ArrayLike) -> Tensor:
    """Mean squared error between ``prediction`` and a constant ``target``."""

    diff = sub(prediction, target)
    return mean(mul(diff, diff))


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------


def linear(x: ArrayLike, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` for ``x`` of shape (in,) or (batch, in)."""

    x = as_tensor(x)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"linear: input {x.shape} does not match weight {weight.shape}")
    lead = "b" if x.ndim == 2 else ""
    out = einsum(f"{lead}k,ok->{lead}o", x, weight)
    return add(out, bias) if bias is not None else out


def conv_day(cube: ArrayLike, kernels: Tensor, bias: Tensor) -> Tensor:
    """Apply each day-wide kernel to every day of a market cube.

    ``cube`` is (t, m, n) or (batch, t, m, n); ``kernels`` is (J, n, m). The
    result is the ReLU'd (t, J) feature-map matrix whose column j is c^j.
    """

    cube = as_tensor(cube)
    if kernels.ndim != 3 or cube.ndim not in (3, 4):
        raise ShapeError(f"conv_day: cube {cube.shape} / kernels {kernels.shape} have the wrong rank")
    _, n_extent, m_extent = kernels.shape
    if cube.shape[-2:] != (m_extent, n_extent):
        raise ShapeError(f"conv_day: kernels span ({n_extent}, {m_extent}) but days are {cube.shape[-2:]}")
    if bias.shape != (kernels.shape[0],):
        raise ShapeError(f"conv_day: bias {bias.shape} does not match {kernels.shape[0]} kernels")
    lead = "b" if cube.ndim == 4 else ""
    response = einsum(f"{lead}tmn,jnm->{lead}tj", cube, kernels)
    return relu(add(response, bias))


class AttentionOutput(NamedTuple):
    weights: Tensor
    pooled: Tensor
    energies: Tensor


def additive_attention(
    stock_emb: Tensor,
    features: Tensor | Sequence[Tensor],
    w_sz: Tensor,
    w_cz: Tensor,
    v: Tensor,
) -> AttentionOutput:
    """Score each feature map against a stock embedding and pool them.

    ``features`` is a list of J maps of length t, a (t, J) tensor, or a batched
    (batch, t, J) tensor paired with a (batch, v) ``stock_emb``.
    """

    if not isinstance(features, Tensor):
        if not features:
            raise ShapeError("additive_attention needs at least one feature map")
        features = stack(list(features), axis=-1)
    batched = features.ndim == 3
    if stock_emb.ndim != (2 if batched else 1):
        raise ShapeError(f"stock embedding {stock_emb.shape} does not match features {features.shape}")
    t = features.shape[-2]
    if w_sz.shape[1] != stock_emb.shape[-1] or w_cz.shape != (w_sz.shape[0], t) or v.shape != (w_sz.shape[0],):
        raise ShapeError(
            f"attention parameters w_sz {w_sz.shape}, w_cz {w_cz.shape}, v {v.shape} "
            f"do not fit embedding {stock_emb.shape} and features {features.shape}"
        )

    if batched:
        from_stock = einsum("av,bv->ba", w_sz, stock_emb)
        from_maps = einsum("at,btj->bja", w_cz, features)
        z = tanh(add(from_maps, reshape(from_stock, (from_stock.shape[0], 1, from_stock.shape[1]))))
        energies = einsum("bja,a->bj", z, v)
        weights = softmax(energies, axis=-1)
        pooled = einsum("btj,bj->bt", features, weights)
    else:
        from_stock = einsum("av,v->a", w_sz, stock_emb)
        from_maps = einsum("at,tj->ja", w_cz, features)
        z = tanh(add(from_maps, from_stock))
        energies = einsum("ja,a->j", z, v)
        weights = softmax(energies, axis=-1)
        pooled = einsum("tj,j->t", features, weights)
    return AttentionOutput(weights=weights, pooled=pooled, energies=energies)


class LSTMState(NamedTuple):
    h: Tensor
    c: Tensor


def lstm_step(
    x_t: ArrayLike,
    h_prev: ArrayLike,
    c_prev: ArrayLike,
    weight: Tensor,
    bias: Tensor | None = None,
) -> LSTMState:
    """One LSTM update with gates stacked (i, f, o, j) over ``[h_prev, x_t]``."""

    x_t, h_prev, c_prev = as_tensor(x_t), as_tensor(h_prev), as_tensor(c_prev)
    cell = h_prev.shape[-1]
    if weight.shape != (4 * cell, cell + x_t.shape[-1]):
        raise ShapeError(f"lstm weight {weight.shape} does not map {cell}+{x_t.shape[-1]} inputs to 4x{cell}")
    gates = linear(concat([h_prev, x_t], axis=-1), weight, bias)
    i = sigmoid(gates[..., 0:cell])
    f = sigmoid(gates[..., cell : 2 * cell])
    o = sigmoid(gates[..., 2 * cell : 3 * cell])
    j = tanh(gates[..., 3 * cell :])
    c_t = add(mul(f, c_prev), mul(i, j))
    h_t = mul(o, tanh(c_t))
    return LSTMState(h=h_t, c=c_t)


def lstm_sequence(sequence: Tensor, weight: Tensor, bias: Tensor | None = None) -> LSTMState:
    """Run ``lstm_step`` over (batch, t, n) inputs from a zero state."""

    batch, steps, _ = sequence.shape
    cell = weight.shape[0] // 4
    state = LSTMState(h=Tensor(np.zeros((batch, cell))), c=Tensor(np.zeros((batch, cell))))
    for step in range(steps):
        state = lstm_step(sequence[:, step, :], state.h, state.c, weight, bias)
    return state


class Conv1d(Function):
    """Stride-1, zero-padded 'same' convolution over (batch, channels, length)."""

    def forward(self, x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
        kernel = weight.shape[2]
        self.pad = kernel // 2
        length = x.shape[2]
        padded = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad)))
        self.padded_shape = padded.shape
        self.cols = np.stack([padded[:, :, k : k + length] for k in range(kernel)], axis=2)
        return np.einsum("bckl,ock->bol", self.cols, weight, optimize=True) + bias[None, :, None]

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        _, weight, _ = self.inputs
        kernel = weight.shape[2]
        length = grad.shape[2]
        grad_weight = np.einsum("bol,bckl->ock", grad, self.cols, optimize=True)
        grad_bias = grad.sum(axis=(0, 2))
        grad_cols = np.einsum("bol,ock->bckl", grad, weight.data, optimize=True)
        grad_padded = np.zeros(self.padded_shape)
        for k in range(kernel):
            grad_padded[:, :, k : k + length] += grad_cols[:, :, k, :]
        return grad_padded[:, :, self.pad : self.pad + length], grad_weight, grad_bias


def conv1d(x: ArrayLike, weight: Tensor, bias: Tensor) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 3 or weight.ndim != 3 or weight.shape[1] != x.shape[1]:
        raise ShapeError(f"conv1d: input {x.shape} does not match weight {weight.shape}")
    if weight.shape[2] % 2 == 0:
        raise ShapeError(f"conv1d needs an odd kernel extent, got {weight.shape[2]}")
    if bias.shape != (weight.shape[0],):
        raise ShapeError(f"conv1d: bias {bias.shape} does not match {weight.shape[0]} filters")
    return Conv1d.apply(x, weight, bias)


def adaptive_pool_matrix(in_length: int, out_length: int) -> np.ndarray:
    """Averaging matrix mapping ``in_length`` positions onto ``out_length`` bins."""

    if in_length <= 0 or out_length <= 0:
        raise ValueError("adaptive pooling lengths must be positive")
    matrix = np.zeros((out_length, in_length))
    for row in range(out_length):
        start = (row * in_length) // out_length
        end = -(-((row + 1) * in_length) // out_length)
        matrix[row, start:end] = 1.0 / (end - start)
    return matrix


def adaptive_avg_pool(x: ArrayLike, out_length: int) -> Tensor:
    """Average-pool the last axis of (batch, channels, length) to ``out_length``."""

    x = as_tensor(x)
    matrix = Tensor(adaptive_pool_matrix(x.shape[-1], out_length))
    return einsum("bcl,gl->bcg", x, matrix)

