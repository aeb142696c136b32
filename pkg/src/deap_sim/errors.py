"""Exception hierarchy for deap-sim.

All errors raised on purpose by the simulator derive from ``DeapSimError`` so
the CLI can map them onto exit codes without catching unrelated bugs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Tuple


class DeapSimError(Exception):
    """Base class for every structured simulator error."""


class ContractError(DeapSimError, ValueError):
    """Raised when a caller violates an operation's preconditions."""


class DeviceRangeError(ContractError):
    """Raised when a ring cannot realize the requested target.

    Attributes:
        value: The requested intensity or weight (or phase for guard failures)
        interval: Achievable (lo, hi) interval, if one is defined
    """

    def __init__(self, message: str, value: float, interval: Optional[Tuple[float, float]] = None):
        if interval is not None:
            message = f"{message} (achievable interval [{interval[0]:.6g}, {interval[1]:.6g}])"
        super().__init__(message)
        self.value = value
        self.interval = interval


class ConfigurationError(DeapSimError):
    """Raised for invalid hardware bounds, budgets or run configuration."""


class DataFormatError(DeapSimError):
    """Raised when an input file cannot be parsed.

    Attributes:
        path: File being parsed, if known
        offset: Byte offset of the problem (binary formats)
        line: Line number of the problem (text formats)
    """

    def __init__(
        self,
        message: str,
        path: Optional[Path] = None,
        offset: Optional[int] = None,
        line: Optional[int] = None,
    ):
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"byte {offset}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} [{', '.join(where)}]"
        super().__init__(message)
        self.path = path
        self.offset = offset
        self.line = line


class SchemaError(DataFormatError):
    """Raised when a well-formed document has a field with the wrong shape."""

    def __init__(self, message: str, field: str, path: Optional[Path] = None):
        super().__init__(f"{field}: {message}", path=path)
        self.field = field
        self.detail = message


class AcceptanceError(DeapSimError):
    """Raised when an acceptance gate (evaluate/bench --check) fails."""

    def __init__(self, message: str, failures: Optional[list[str]] = None):
        super().__init__(message)
        self.failures = failures or []
