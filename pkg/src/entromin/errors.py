"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration, parameters, or input files (CLI exit 2)."""


class NumericError(RuntimeError):
    """Numerical failure, e.g. curvature estimation stall (CLI exit 3)."""


class DimensionError(ValueError):
    """Operator/vector shape mismatch."""
