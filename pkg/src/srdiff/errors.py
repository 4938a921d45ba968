"""Exceptions raised by srdiff."""
from __future__ import annotations

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from srdiff.models.trajectory import Trajectory


class SrdiffError(Exception):
    """Base class for all srdiff errors."""


class InvalidInputError(SrdiffError, ValueError):
    """Input contains non-finite values or has the wrong shape."""


class ConfigurationError(SrdiffError, ValueError):
    """A frame, kernel or configuration value does not resolve."""


class DegenerateConfigurationError(SrdiffError, ValueError):
    """Two landmarks coincide."""


class DegenerateCovectorError(SrdiffError, ValueError):
    """A covector that must be nonzero vanishes identically."""


class UnsupportedDepthError(SrdiffError, ValueError):
    """A bracket word is deeper than any supported evaluation strategy."""


class OrientationError(SrdiffError, ValueError):
    """A flow Jacobian has a nonpositive determinant."""


class OutOfChartError(SrdiffError, ValueError):
    """Chart coordinates lie outside the configured chart radius."""


class IncompatibleRhsError(SrdiffError, ValueError):
    """A right-hand side violates the solvability condition of a singular operator."""


class PreconditionError(SrdiffError, ValueError):
    """An operation precondition does not hold."""


class NonConvergedError(SrdiffError, RuntimeError):
    """An iterative method stopped before reaching its tolerance."""


class BlowUpError(SrdiffError, RuntimeError):
    """An integration produced non-finite or unbounded values."""

    def __init__(self, message: str, step: int, partial: Optional[Trajectory] = None) -> None:
        """
        Initialize the error.

        :param message: Description of the failure.
        :param step: Index of the step that failed.
        :param partial: Trajectory computed up to the last good step.
        """
        super().__init__(f"{message} (step {step})")
        self.step = step
        self.partial = partial
