from typing import Optional


class EhmcError(Exception):
    """Base class for all errors raised by ehmc-bench."""

    pass


class ConfigError(EhmcError, ValueError):
    """Raised when a configuration value is outside its valid range."""

    pass


class DivergentValueError(EhmcError):
    """Raised when an energy or potential evaluates to a non-finite value."""

    pass


class DivergenceError(EhmcError):
    """Raised when a leapfrog trajectory leaves the finite numbers.

    Attributes:
        step: Index (1-based) of the leapfrog step at which the state diverged
        path: Finite points visited before the divergence, when known
    """

    def __init__(self, message: str, step: int = 0, path=None):
        super().__init__(message)
        self.step = step
        self.path = path


class EmptyDistributionError(EhmcError):
    """Raised when sampling from a batch distribution with no entries."""

    pass


class AdaptationError(EhmcError):
    """Raised when step size adaptation cannot produce a usable step size."""

    pass


class ModelError(EhmcError):
    """Raised when a target model is evaluated outside its domain."""

    pass


class UndefinedESSError(EhmcError):
    """Raised when the effective sample size of a sequence is undefined."""

    pass


class CacheOverflowError(EhmcError):
    """Raised when the prHMC path cache grows beyond its hard cap."""

    pass


class DataFormatError(EhmcError):
    """Raised when a data file cannot be parsed.

    Attributes:
        row: 1-based row of the offending value, if known
        column: 1-based column of the offending value, if known
    """

    def __init__(
        self, message: str, row: Optional[int] = None, column: Optional[int] = None
    ):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class SamplerWarning(UserWarning):
    """Warning category for recoverable sampler anomalies."""

    pass
