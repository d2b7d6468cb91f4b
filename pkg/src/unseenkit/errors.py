"""Exception types shared across the package."""

from __future__ import annotations


class UnseenKitError(Exception):
    """Base class for every error raised by unseenkit."""


class DomainError(UnseenKitError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class DataError(UnseenKitError, ValueError):
    """Malformed input data (unparseable dataset line, bad parameter file)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientSignalError(DomainError):
    """The data carry no information for the requested fit (e.g. zero features)."""


class NumericalError(UnseenKitError, ArithmeticError):
    """A computation could not be carried out to the required accuracy."""


class TruncationBudgetExceeded(NumericalError):
    """Exact cdf accumulation needed more terms than allowed.

    ``partial_mass`` is the probability mass accumulated before the scan
    stopped.
    """

    def __init__(self, message: str, partial_mass: float):
        super().__init__(message)
        self.partial_mass = partial_mass


class SamplerOverflowError(NumericalError):
    """A sampler step produced an implausibly large (or non-finite) draw."""


class ApproximationWarning(UserWarning):
    """A result was computed from an asymptotic approximation."""
