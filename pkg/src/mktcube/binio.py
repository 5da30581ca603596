"""Little-endian binary helpers shared by checkpoint and cube files."""
from __future__ import annotations

import struct

import numpy as np

from .exceptions import FileFormatError


class BinaryWriter:
    """Accumulates a binary payload."""

    def __init__(self) -> None:
        self._buffer = bytearray()

    def u8(self, value: int) -> None:
        self._buffer += struct.pack("<B", value)

    def u32(self, value: int) -> None:
        self._buffer += struct.pack("<I", value)

    def u64(self, value: int) -> None:
        self._buffer += struct.pack("<Q", value)

    def f64(self, value: float) -> None:
        self._buffer += struct.pack("<d", value)

    def raw(self, payload: bytes) -> None:
        self._buffer += payload

    def string(self, value: str) -> None:
        encoded = value.encode("utf-8")
        self.u32(len(encoded))
        self._buffer += encoded

    def array(self, values: np.ndarray) -> None:
        """Write shape (ndim, dims) followed by the float64 payload."""

        values = np.asarray(values, dtype=np.float64)
        self.u32(values.ndim)
        for dim in values.shape:
            self.u32(dim)
        self._buffer += values.astype("<f8", copy=False).tobytes(order="C")

    def getvalue(self) -> bytes:
        return bytes(self._buffer)


class BinaryReader:
    """Sequential reader that reports the byte offset of any failure."""

    def __init__(self, payload: bytes, source: str) -> None:
        self._payload = payload
        self._offset = 0
        self.source = source

    @property
    def offset(self) -> int:
        return self._offset

    def fail(self, message: str) -> FileFormatError:
        return FileFormatError(self.source, self._offset, message)

    def take(self, size: int, what: str) -> bytes:
        end = self._offset + size
        if end > len(self._payload):
            raise self.fail(f"truncated while reading {what}")
        chunk = self._payload[self._offset:end]
        self._offset = end
        return chunk

    def magic(self, expected: bytes) -> None:
        if self.take(len(expected), "magic bytes") != expected:
            self._offset = 0
            raise self.fail(f"bad magic, expected {expected!r}")

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1, "u8"))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4, "u32"))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8, "u64"))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8, "f64"))[0]

    def string(self) -> str:
        length = self.u32()
        start = self._offset
        try:
            return self.take(length, "string").decode("utf-8")
        except UnicodeDecodeError as exc:
            self._offset = start
            raise self.fail("invalid utf-8 string") from exc

    def array(self) -> np.ndarray:
        ndim = self.u32()
        if ndim > 8:
            raise self.fail(f"implausible tensor rank {ndim}")
        shape = tuple(self.u32() for _ in range(ndim))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        payload = self.take(8 * count, "float64 payload")
        return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)

    def expect_end(self) -> None:
        if self._offset != len(self._payload):
            raise self.fail("unexpected trailing bytes")
