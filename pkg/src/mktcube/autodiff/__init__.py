"""Dense float64 tensors, reverse-mode gradients, layers, and Adam."""
from .checkpoint import ModelCheckpoint, load_checkpoint, save_checkpoint
from .functional import (
    AttentionOutput,
    LSTMState,
    adaptive_avg_pool,
    additive_attention,
    concat,
    conv1d,
    conv_day,
    einsum,
    linear,
    lstm_sequence,
    lstm_step,
    mse,
    relu,
    sigmoid,
    softmax,
    stack,
    tanh,
)
from .optim import Adam, OptimizerState, adam_step, clip_global_norm
from .pooling import PoolRecord, ablate_records, maxpool_with_indices, unpool
from .tensor import Function, Tensor, backward

__all__ = [
    "Adam",
    "AttentionOutput",
    "Function",
    "LSTMState",
    "ModelCheckpoint",
    "OptimizerState",
    "PoolRecord",
    "Tensor",
    "ablate_records",
    "adam_step",
    "adaptive_avg_pool",
    "additive_attention",
    "backward",
    "clip_global_norm",
    "concat",
    "conv1d",
    "conv_day",
    "einsum",
    "linear",
    "load_checkpoint",
    "lstm_sequence",
    "lstm_step",
    "maxpool_with_indices",
    "mse",
    "relu",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "stack",
    "tanh",
    "unpool",
]
