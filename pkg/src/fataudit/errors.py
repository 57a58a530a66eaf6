"""Exception types raised across the toolkit."""


class AuditError(Exception):
    """Base class for every error this package raises on purpose."""


class ArgumentError(AuditError, ValueError):
    """An argument value violates an operation's precondition."""


class SchemaError(AuditError):
    """A schema is inconsistent or does not match the data it describes."""


class IngestionError(AuditError):
    """A CSV file cannot be turned into a dataset.

    Carries the offending (row, column) position when known; row numbers
    count data rows from 1, excluding the header.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class TrainingError(AuditError):
    """A built-in model cannot be fitted on the given dataset."""


class UnsupportedError(AuditError):
    """The model does not support the requested operation."""


class StateError(AuditError, RuntimeError):
    """An operation was called in the wrong state (e.g. predict before fit)."""


class RemoteModelError(AuditError):
    """A remote model call failed (transport, timeout or protocol)."""


class FitError(AuditError):
    """A numeric fit is impossible or ill-posed for the given inputs."""
