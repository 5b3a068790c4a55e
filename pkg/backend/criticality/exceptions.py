from typing import Optional


class CriticalityError(Exception):
    """Base class for every failure raised by the criticality package."""


class InvalidLatticeError(CriticalityError, ValueError):
    """A lattice specification or coupling set violates its invariants."""


class CapacityError(CriticalityError):
    """The requested Hilbert space does not fit the supported address space."""


class DimensionMismatchError(CriticalityError, ValueError):
    """A state vector does not match the operator dimension."""


class ConvergenceError(CriticalityError):
    """
    An iterative procedure stopped at its iteration cap.

    Attributes:
        residual: Largest residual norm reached by the solver, if any
        best_value: Best objective value found by an optimizer, if any
    """

    def __init__(
        self,
        message: str,
        residual: Optional[float] = None,
        best_value: Optional[float] = None,
    ) -> None:
        super().__init__(message)
        self.residual = residual
        self.best_value = best_value

    def __reduce__(self):
        return (type(self), (str(self), self.residual, self.best_value))


class LevelResolutionError(CriticalityError):
    """Degenerate levels could not be resolved from the computed spectrum."""


class NumericalFailure(CriticalityError):
    """A numerical invariant broke by more than roundoff allows."""


class SweepPointError(CriticalityError):
    """A sweep point failed; carries the offending parameter value."""

    def __init__(self, param: float, cause: Exception) -> None:
        super().__init__(f"sweep point {param!r} failed: {cause}")
        self.param = param
        self.cause = cause

    def __reduce__(self):
        return (type(self), (self.param, self.cause))


class JumpVanishedError(CriticalityError):
    """Bisection lost the discontinuity it was refining."""


class FitError(CriticalityError):
    """A least-squares fit could not produce the requested quantity."""


class SchemaError(CriticalityError):
    """A sweep file or manifest does not follow the expected schema."""
