"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid geometry, model or run parameters."""


class NumericalError(RuntimeError):
    """Blow-up, non-finite values or a failed eigensolve."""
