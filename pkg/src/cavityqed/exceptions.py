"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError` (a ``ValueError``),
numerical failures from :class:`NumericalError` (a ``RuntimeError``); the CLI
maps the two families onto distinct exit codes.
"""


class ConfigError(ValueError):
    """Invalid or incompatible parameters."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericalError(RuntimeError):
    """A solver could not produce a trustworthy result."""


class DegenerateSteadyStateError(NumericalError):
    def __init__(self, smallest, second):
        super().__init__(
            f"steady state is not unique: smallest singular value {smallest:.3e}, "
            f"second smallest {second:.3e}"
        )
        self.smallest = smallest
        self.second = second


class TruncationCapError(NumericalError):
    pass


class UndefinedCorrelationError(NumericalError):
    pass


class InsufficientDataError(NumericalError):
    pass


class EffectAbsentError(ValueError):
    """Raised by threshold scans when the effect is missing at the first value."""
