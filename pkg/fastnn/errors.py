from __future__ import annotations

from typing import Optional


class FastNnError(Exception):
    """Base class for every error raised by the library."""


class ShapeError(FastNnError):
    pass


class ConfigError(FastNnError):
    pass


class InputError(FastNnError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None) -> None:
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NumericError(FastNnError):
    pass


class ContractViolation(FastNnError):
    pass
