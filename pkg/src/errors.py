"""
Exception hierarchy.

Bad inputs derive from ValueError and failed numerical processing from
RuntimeError, so callers can keep catching the builtin types.
"""

from typing import Optional, Sequence, Tuple


class WGMError(Exception):
    """Base class for all toolkit errors."""


class DomainError(WGMError, ValueError):
    """An operation was called outside its precondition."""


class ConfigError(DomainError):
    """A run configuration violates the schema."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        prefix = f"{field}: " if field else ""
        super().__init__(f"{prefix}{message}")


class NumericError(WGMError, RuntimeError):
    """A solver failed to converge or to bracket a root."""

    def __init__(self, message: str, bracket: Optional[Tuple[float, float]] = None):
        self.bracket = bracket
        if bracket is not None:
            message = f"{message} (bracket [{bracket[0]:.6g}, {bracket[1]:.6g}])"
        super().__init__(message)


class FitError(WGMError, RuntimeError):
    """A dip fit did not produce a physical, converged result."""

    def __init__(
        self,
        message: str,
        last_iterate: Optional[Sequence[float]] = None,
        residual_rms: Optional[float] = None,
    ):
        self.last_iterate = None if last_iterate is None else tuple(float(v) for v in last_iterate)
        self.residual_rms = residual_rms
        super().__init__(message)
