"""
Error Hierarchy
Exceptions raised across the tabular solvers, the learners, the environments
and the experiment harness.
"""


class DacError(Exception):
    """Base class for every error raised by this package."""


class InputValidationError(DacError, ValueError):
    """An argument violates a documented precondition (non-stochastic row, bad range, ...)."""


class ShapeMismatchError(InputValidationError):
    """Array or parameter shapes do not line up."""


class InternalSolverError(DacError, RuntimeError):
    """A numerical routine failed where the mathematics says it cannot."""


class ConvergenceError(InternalSolverError):
    """An iterative solver hit its iteration cap before meeting its tolerance."""

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class MonotonicityViolation(DacError):
    """Policy iteration produced a value that decreased beyond tolerance."""

    def __init__(self, message: str, iteration: int, state: int, drop: float):
        super().__init__(f"{message} (iteration={iteration}, state={state}, drop={drop:.3e})")
        self.iteration = iteration
        self.state = state
        self.drop = drop


class NonFiniteGradientError(DacError, ArithmeticError):
    """A loss or gradient evaluated to NaN or infinity."""

    def __init__(self, label: str, step: int = -1):
        super().__init__(f"non-finite value in {label} at train step {step}")
        self.label = label
        self.step = step


class NoRecordedPassError(DacError, RuntimeError):
    """A gradient was requested without a recorded forward pass."""


class UsageError(DacError, RuntimeError):
    """An operation was called in a mode that does not support it."""


class EnvironmentFault(DacError, RuntimeError):
    """An environment failed while being stepped or reset."""


class ConfigurationError(DacError, ValueError):
    """Configuration could not be parsed or validated."""


class SchemaVersionError(DacError, ValueError):
    """A CSV artifact carries a schema header this version cannot read."""
