class HeatEffError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DataValidationError(HeatEffError, ValueError):
    """Input data or configuration violates a contract."""

    exit_code = 2


class WindowError(DataValidationError):
    """Calibration window is too short, misordered or lacks required data."""


class NumericalError(HeatEffError, ArithmeticError):
    """A linear system could not be solved reliably."""

    exit_code = 3


class NotIdentifiableError(NumericalError):
    """A model coefficient cannot be estimated from the supplied data."""
