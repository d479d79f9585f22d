"""Exception hierarchy.

ValidationError subclasses map to CLI exit code 1, NumericalError
subclasses to exit code 2.
"""


class OdefindError(Exception):
    pass


class ValidationError(OdefindError):
    """Bad inputs: schema, shapes, parameters, config."""


class NumericalError(OdefindError):
    """Failures arising during computation."""


class SchemaError(ValidationError):
    """Missing or mismatched columns / variable names."""


class GridError(ValidationError):
    """Non-uniform or non-increasing time grid."""


class DataError(ValidationError):
    """Non-finite or unparseable values in a dataset."""


class DegenerateColumnError(ValidationError):
    """A column with zero variance where scaling is required."""


class InsufficientDataError(ValidationError):
    """Too few rows for the requested operation."""


class ParameterError(ValidationError):
    """Out-of-range algorithm parameter."""


class ConfigError(ValidationError):
    """Invalid run-configuration file."""


class EvaluationError(NumericalError):
    """A candidate term evaluated to non-finite values."""


class UndefinedR2Error(NumericalError):
    """R^2 requested against a zero-variance target."""


class SelectionError(NumericalError):
    """No eligible path entry for the requested selection rule."""


class DivergenceError(NumericalError):
    """State blow-up during integration."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ComparabilityError(ValidationError):
    """Models built on different library manifests cannot be compared."""
