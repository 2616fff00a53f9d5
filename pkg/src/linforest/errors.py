"""Error types shared across the package."""


class LinforestError(Exception):
    """Base class for all errors raised by this package."""


class DataError(LinforestError):
    """Bad input data: unreadable files, schema mismatches, unparseable cells."""


class ConfigError(LinforestError):
    """Invalid hyperparameters or inconsistent configuration."""
