"""Exception types raised across the toolkit.

Every error raised by fairbench derives from :class:`FairbenchError`, so
callers can catch a single base class at pipeline boundaries while tests
can assert the precise failure mode.
"""


class FairbenchError(Exception):
    """Base class for all fairbench errors."""


class SchemaError(FairbenchError):
    """A dataset file does not match its declared schema."""


class CardinalityError(FairbenchError):
    """A target or protected column does not map onto exactly two values."""


class EmptyInputError(FairbenchError):
    """An input (file, curve set, grid) is empty where content is required."""


class GroupEmptyError(FairbenchError):
    """A protected group has no members but a group-conditional rate is needed."""


class CellEmptyError(FairbenchError):
    """A (label, group) cell has no members but cell frequencies are needed."""


class DegenerateLabelsError(FairbenchError):
    """Labels contain a single class (or a group has no positives) where both are required."""


class ConvergenceError(FairbenchError):
    """An iterative optimizer hit its iteration cap above tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class GridError(FairbenchError):
    """An integration grid is too small or does not cover the unit interval."""


class CalibrationError(FairbenchError):
    """Coefficient search could not reach the requested targets."""

    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual


class GenerationSpecError(FairbenchError):
    """A synthetic-data spec is internally inconsistent (scheme vs feature counts)."""


class ParameterError(FairbenchError):
    """An argument is outside its documented range."""


class ShapeError(FairbenchError):
    """An array has the wrong width or length for the fitted object."""


class UnsupportedModelError(FairbenchError):
    """An operation was applied to a model kind it does not support."""


class TuningError(FairbenchError):
    """Cross-validation could not score any fold."""


class ConfigError(FairbenchError):
    """An experiment configuration file is invalid."""


class RunNotFoundError(FairbenchError):
    """A results directory does not contain a completed run."""


class PipelineFailure(FairbenchError):
    """Too many cells of a pipeline sweep failed to produce metrics."""
