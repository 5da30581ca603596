"""Binary ``.mkcb`` market cube files.

Layout (little endian)::

    b"MKCB" | u32 version | u32 t | u32 m | u32 n
    t x string date (ISO) | m x string stock_id | n x string indicator
    t*m*n x f64 values (C order)
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from ..binio import BinaryReader, BinaryWriter
from ..exceptions import MissingInputError
from .types import MarketCube

MAGIC = b"MKCB"
FORMAT_VERSION = 1


def cube_to_bytes(cube: MarketCube) -> bytes:
    writer = BinaryWriter()
    writer.raw(MAGIC)
    writer.u32(FORMAT_VERSION)
    t, m, n = cube.values.shape
    for size in (t, m, n):
        writer.u32(size)
    for date in cube.dates:
        writer.string(pd.Timestamp(date).date().isoformat())
    for stock_id in cube.stock_order:
        writer.string(stock_id)
    for name in cube.indicator_names:
        writer.string(name)
    writer.raw(np.ascontiguousarray(cube.values, dtype="<f8").tobytes(order="C"))
    return writer.getvalue()


def cube_from_bytes(payload: bytes, source: str = "<memory>") -> MarketCube:
    reader = BinaryReader(payload, source)
    reader.magic(MAGIC)
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise reader.fail(f"unsupported cube version {version}")
    t, m, n = reader.u32(), reader.u32(), reader.u32()
    dates = []
    for _ in range(t):
        text = reader.string()
        try:
            dates.append(pd.Timestamp(text))
        except ValueError as exc:
            raise reader.fail(f"bad date {text!r}") from exc
    stock_order = tuple(reader.string() for _ in range(m))
    names = tuple(reader.string() for _ in range(n))
    raw = reader.take(8 * t * m * n, "cube values")
    values = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(t, m, n)
    reader.expect_end()
    try:
        return MarketCube(dates=tuple(dates), stock_order=stock_order, indicator_names=names, values=values)
    except ValueError as exc:
        raise reader.fail(str(exc)) from exc


def save_cube(cube: MarketCube, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(cube_to_bytes(cube))
    return path


def load_cube(path: Path) -> MarketCube:
    if not path.exists():
        raise MissingInputError(path, "cube file not found")
    return cube_from_bytes(path.read_bytes(), source=str(path))
