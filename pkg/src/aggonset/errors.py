"""Exception types shared across the package."""

from __future__ import annotations


class AggonsetError(Exception):
    """Base class for all package errors."""


class ConfigError(AggonsetError):
    """Invalid configuration value or combination."""


class IngestError(AggonsetError):
    """Malformed input file. Carries the file path and 1-based line number."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + loc)


class DataError(AggonsetError):
    """Non-finite or structurally invalid numeric input."""


class LayoutMismatchError(AggonsetError):
    """Feature values do not match the expected feature layout."""


class FitConvergenceError(AggonsetError):
    """Optimizer did not reach the gradient tolerance within max iterations."""

    def __init__(self, gradient_norm: float, iterations: int):
        self.gradient_norm = gradient_norm
        self.iterations = iterations
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(gradient inf-norm {gradient_norm:.3e})"
        )


class RoutingError(AggonsetError):
    """Prediction requested for a participant unknown to the trained scheme."""


class UndefinedAucError(AggonsetError):
    """AUC requested for a single-class label set."""
