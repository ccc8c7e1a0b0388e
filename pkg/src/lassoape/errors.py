"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LassoApeError(Exception):
    """Base class for all package errors."""


class DataError(LassoApeError):
    """Malformed or inconsistent input data."""


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(DataError, ValueError):
    """A value lies outside its admissible domain."""


class ShapeError(DataError):
    pass


class ConflictError(DataError):
    pass


class ConsistencyError(DataError):
    pass


class NumericalError(LassoApeError):
    """A numerical routine failed; carries the failing sub-problem when known."""

    def __init__(self, message: str, *, subproblem: str | None = None, **info):
        self.subproblem = subproblem
        self.info = info
        if subproblem:
            message = f"[{subproblem}] {message}"
        super().__init__(message)


class ConvergenceError(NumericalError):
    pass


class SeparationError(NumericalError):
    pass


class SingularityError(NumericalError):
    pass


class ConfigError(LassoApeError, ValueError):
    pass
