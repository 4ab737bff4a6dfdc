"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError (and subclasses) -> 3, NumericError -> 4.
"""


class GcnmError(Exception):
    """Base class for all package errors."""


class ConfigError(GcnmError):
    """Invalid configuration value, unknown key, or bad flag combination."""


class DataError(GcnmError):
    """Input data violates a documented contract."""


class SchemaError(DataError):
    """File structure does not match the expected schema."""


class OrderingError(DataError):
    """Timestamps are not strictly increasing."""


class NumericError(GcnmError):
    """Non-finite values encountered where finite maths is required."""
