"""Exception hierarchy shared by the solver modules and the CLI."""


class BinlsError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BinlsError, ValueError):
    """Invalid grid, equation parameters or run configuration."""


class DomainError(BinlsError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ScalingNotAvailableError(DomainError):
    """The scaling family only exists for the pure quartic case a = 0."""


class NonConvergenceError(BinlsError, RuntimeError):
    """Newton iteration hit its iteration cap."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InnerSolveError(NonConvergenceError):
    """GMRES failed to reduce the linearised residual."""


class NumericalFailure(BinlsError, FloatingPointError):
    """NaN/Inf appeared in a time-stepped state."""

    def __init__(self, message, last_record=None):
        super().__init__(message)
        self.last_record = last_record


class FitUnreliableError(BinlsError, ValueError):
    """Blow-up trace does not support a power-law fit."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
