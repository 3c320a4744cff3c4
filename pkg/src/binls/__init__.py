"""Numerical workbench for i u_t - u_xxxx - 2a u_xx + |u|^alpha u = 0 in one dimension."""

from .errors import (
    BinlsError,
    ConfigurationError,
    DomainError,
    FitUnreliableError,
    InnerSolveError,
    NonConvergenceError,
    NumericalFailure,
    ScalingNotAvailableError,
)
from .spectral import Field, Grid, make_grid

__version__ = "0.1.0"

__all__ = [
    "BinlsError",
    "ConfigurationError",
    "DomainError",
    "FitUnreliableError",
    "InnerSolveError",
    "NonConvergenceError",
    "NumericalFailure",
    "ScalingNotAvailableError",
    "Field",
    "Grid",
    "make_grid",
]
