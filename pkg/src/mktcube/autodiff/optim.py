"""Adam with global-norm gradient clipping."""
from __future__ import annotations

from collections.abc import Mapping, MutableMapping
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ShapeError
from .tensor import Tensor


@dataclass(slots=True)
class OptimizerState:
    """Adam moments and hyper-parameters for a named parameter set."""

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


def clip_global_norm(grads: MutableMapping[str, np.ndarray], max_norm: float = 5.0) -> float:
    """Rescale ``grads`` in place so their joint L2 norm is at most ``max_norm``.

    Returns the norm measured before clipping.
    """

    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if total > max_norm:
        scale = max_norm / total
        for name in grads:
            grads[name] = grads[name] * scale
    return total


def adam_step(params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray], state: OptimizerState) -> None:
    """Apply one bias-corrected Adam update to every parameter in ``params``."""

    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        if grad.shape != param.shape:
            raise ShapeError(f"gradient for {name} has shape {grad.shape}, parameter has {param.shape}")

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None or v is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first_moment[name] = m
        state.second_moment[name] = v
        update = state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        param.data = param.data - update


class Adam:
    """Optimizer binding parameters, clipping threshold, and ``OptimizerState``."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        learning_rate: float = 0.001,
        clip_norm: float | None = 5.0,
        state: OptimizerState | None = None,
    ) -> None:
        self.params = dict(params)
        self.clip_norm = clip_norm
        self.state = state or OptimizerState(learning_rate=learning_rate)

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()

    def step(self) -> float:
        """Clip the accumulated gradients, update, and return the pre-clip norm."""

        grads = {
            name: param.grad if param.grad is not None else np.zeros_like(param.data)
            for name, param in self.params.items()
        }
        if self.clip_norm is not None:
            norm = clip_global_norm(grads, self.clip_norm)
        else:
            norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
        adam_step(self.params, grads, self.state)
        return norm
