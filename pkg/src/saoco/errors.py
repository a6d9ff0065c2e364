"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid experiment or algorithm configuration."""


class NumericalError(RuntimeError):
    """A linear-algebra or floating-point operation failed."""


class DomainError(ValueError):
    """A query point lies outside the declared decision set."""


class LabelRangeError(ValueError):
    """A regression label violates the |y| <= B contract."""
