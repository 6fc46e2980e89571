"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration or arguments, detected before any computation."""


class NumericalError(RuntimeError):
    """A numerical routine failed: bracket expansion exhausted, non-finite values."""
