"""Exception types raised by the market cube toolkit."""
from __future__ import annotations

from pathlib import Path


class MktCubeError(Exception):
    """Base class for every error raised deliberately by ``mktcube``."""


class ConfigError(MktCubeError, ValueError):
    """An experiment configuration key is unknown or carries a bad value."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


class MissingInputError(MktCubeError, FileNotFoundError):
    """An upstream artifact required by a command does not exist."""

    def __init__(self, path: Path | str, message: str = "required input is missing") -> None:
        super().__init__(f"{message}: {path}")
        self.path = Path(path)


class NumericalError(MktCubeError, ArithmeticError):
    """Training produced a non-finite loss."""


class FileFormatError(MktCubeError, ValueError):
    """A binary artifact is truncated, corrupt, or of an unsupported version."""

    def __init__(self, source: str, offset: int, message: str) -> None:
        super().__init__(f"{source}: {message} at byte offset {offset}")
        self.source = source
        self.offset = offset


class ShapeError(MktCubeError, ValueError):
    """Tensor operands have incompatible shapes."""


class DataError(MktCubeError, ValueError):
    """An input CSV table is unreadable or inconsistent."""

    def __init__(self, path: Path | str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = Path(path)
