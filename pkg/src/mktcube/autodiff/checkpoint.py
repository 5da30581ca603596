"""Binary ``.mktc`` checkpoints: parameters, optimizer state, extras, metadata.

Layout (little endian)::

    b"MKTC" | u32 version
    u32 count | count x (string name, array)
    u8 has_optimizer | [u64 step, f64 lr, f64 beta1, f64 beta2, f64 epsilon,
                        u32 count | count x (string name, array m, array v)]
    u32 count | count x (string name, array)          # extras
    string metadata_json
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..binio import BinaryReader, BinaryWriter
from ..exceptions import MissingInputError
from .optim import OptimizerState
from .tensor import Tensor

MAGIC = b"MKTC"
FORMAT_VERSION = 1


@dataclass(slots=True)
class ModelCheckpoint:
    """Everything needed to restore a trained model."""

    params: dict[str, np.ndarray]
    optimizer: OptimizerState | None = None
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def capture(
        cls,
        params: dict[str, Tensor],
        optimizer: OptimizerState | None = None,
        extras: dict[str, np.ndarray] | None = None,
        metadata: dict[str, Any] | None = None,
    ) -> ModelCheckpoint:
        """Snapshot live parameters (copies, so later updates do not leak in)."""

        state = None
        if optimizer is not None:
            state = OptimizerState(
                learning_rate=optimizer.learning_rate,
                beta1=optimizer.beta1,
                beta2=optimizer.beta2,
                epsilon=optimizer.epsilon,
                step=optimizer.step,
                first_moment={k: v.copy() for k, v in optimizer.first_moment.items()},
                second_moment={k: v.copy() for k, v in optimizer.second_moment.items()},
            )
        return cls(
            params={name: tensor.data.copy() for name, tensor in params.items()},
            optimizer=state,
            extras=dict(extras or {}),
            metadata=dict(metadata or {}),
        )

    def restore_into(self, params: dict[str, Tensor]) -> None:
        """Overwrite ``params`` with the stored values (names must match exactly)."""

        missing = sorted(set(params) - set(self.params))
        unexpected = sorted(set(self.params) - set(params))
        if missing or unexpected:
            raise KeyError(f"checkpoint parameters differ: missing={missing} unexpected={unexpected}")
        for name, tensor in params.items():
            stored = self.params[name]
            if stored.shape != tensor.shape:
                raise ValueError(f"checkpoint {name} has shape {stored.shape}, model expects {tensor.shape}")
            tensor.data = stored.copy()

    def to_bytes(self) -> bytes:
        writer = BinaryWriter()
        writer.raw(MAGIC)
        writer.u32(FORMAT_VERSION)
        writer.u32(len(self.params))
        for name, values in self.params.items():
            writer.string(name)
            writer.array(values)

        if self.optimizer is None:
            writer.u8(0)
        else:
            state = self.optimizer
            writer.u8(1)
            writer.u64(state.step)
            writer.f64(state.learning_rate)
            writer.f64(state.beta1)
            writer.f64(state.beta2)
            writer.f64(state.epsilon)
            names = list(state.first_moment)
            writer.u32(len(names))
            for name in names:
                writer.string(name)
                writer.array(state.first_moment[name])
                writer.array(state.second_moment[name])

        writer.u32(len(self.extras))
        for name, values in self.extras.items():
            writer.string(name)
            writer.array(values)
        writer.string(json.dumps(self.metadata, sort_keys=True))
        return writer.getvalue()

    @classmethod
    def from_bytes(cls, payload: bytes, source: str = "<memory>") -> ModelCheckpoint:
        reader = BinaryReader(payload, source)
        reader.magic(MAGIC)
        version = reader.u32()
        if version != FORMAT_VERSION:
            raise reader.fail(f"unsupported checkpoint version {version}")

        params = {}
        for _ in range(reader.u32()):
            name = reader.string()
            params[name] = reader.array()

        optimizer = None
        if reader.u8():
            optimizer = OptimizerState(step=reader.u64())
            optimizer.learning_rate = reader.f64()
            optimizer.beta1 = reader.f64()
            optimizer.beta2 = reader.f64()
            optimizer.epsilon = reader.f64()
            for _ in range(reader.u32()):
                name = reader.string()
                optimizer.first_moment[name] = reader.array()
                optimizer.second_moment[name] = reader.array()

        extras = {}
        for _ in range(reader.u32()):
            name = reader.string()
            extras[name] = reader.array()

        start = reader.offset
        try:
            metadata = json.loads(reader.string())
        except json.JSONDecodeError as exc:
            raise reader.fail(f"metadata block starting at {start} is not JSON") from exc
        reader.expect_end()
        return cls(params=params, optimizer=optimizer, extras=extras, metadata=metadata)


def save_checkpoint(checkpoint: ModelCheckpoint, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint.to_bytes())
    return path


def load_checkpoint(path: Path) -> ModelCheckpoint:
    if not path.exists():
        raise MissingInputError(path, "checkpoint not found")
    return ModelCheckpoint.from_bytes(path.read_bytes(), source=str(path))
