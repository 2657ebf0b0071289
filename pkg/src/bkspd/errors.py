"""Shared exception types."""


class NumericalFailureError(RuntimeError):
    """A computation broke down numerically (non-finite values, loss of
    positive definiteness, recurrence breakdown).  ``iteration`` carries the
    1-based iteration index when one is meaningful."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class ConfigError(ValueError):
    """Invalid harness configuration (unknown key, bad value, bad section)."""
