"""
Exception hierarchy shared by every varpen package.
"""
from typing import Optional


class VarpenError(Exception):
    """Base class for all varpen errors."""


class EvaluationError(VarpenError, ValueError):
    """A functional could not be evaluated (non-finite integrand, grid mismatch, +inf point)."""


class DomainError(VarpenError, ValueError):
    """A point lies outside the essential domain of a potential or system."""


class SolverError(VarpenError, RuntimeError):
    """An inner or outer iterative solver failed to converge."""


class UnsupportedModeError(VarpenError, ValueError):
    """The requested combination of inputs is not supported."""


class ConfigError(VarpenError, ValueError):
    """A run configuration could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
