"""
Shared utilities: error hierarchy, logging and versioned CSV artifacts.
"""

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DacError,
    EnvironmentFault,
    InputValidationError,
    InternalSolverError,
    MonotonicityViolation,
    NoRecordedPassError,
    NonFiniteGradientError,
    SchemaVersionError,
    ShapeMismatchError,
    UsageError,
)
from .logging_setup import configure_logging, console, get_logger

__all__ = [
    "ConfigurationError",
    "ConvergenceError",
    "DacError",
    "EnvironmentFault",
    "InputValidationError",
    "InternalSolverError",
    "MonotonicityViolation",
    "NoRecordedPassError",
    "NonFiniteGradientError",
    "SchemaVersionError",
    "ShapeMismatchError",
    "UsageError",
    "configure_logging",
    "console",
    "get_logger",
]
