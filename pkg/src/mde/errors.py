"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class MDEError(Exception):
    """Base class for all package errors."""


class ConfigError(MDEError):
    """Invalid configuration or usage (bad flag combinations, bad hyperparameters)."""


class DataError(MDEError):
    """Malformed or inconsistent input data (parse failures, vocabulary mismatches)."""


class NumericalError(MDEError):
    """Non-finite values encountered during training."""
