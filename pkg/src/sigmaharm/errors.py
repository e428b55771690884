"""Exception types shared across the package."""


class SigmaharmError(Exception):
    """Base class for all package errors."""


class QuadratureError(SigmaharmError):
    """An integral did not converge to the requested tolerance.

    Carries the best available value and error estimate so callers can
    decide whether to degrade gracefully; raising instead of returning a
    silent value is deliberate.
    """

    def __init__(self, message, value=None, err_est=None):
        super().__init__(message)
        self.value = value
        self.err_est = err_est


class TruncationError(SigmaharmError):
    """A series evaluation could not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ConfigError(SigmaharmError):
    """A run configuration failed to parse or validate."""
