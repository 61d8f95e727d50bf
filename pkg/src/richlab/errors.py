"""Exception hierarchy shared by the richlab modules."""


class RichlabError(Exception):
    """Base class for all errors raised by richlab."""


class InvalidInputError(RichlabError, ValueError):
    """An argument is non-finite or outside its documented domain."""


class DegenerateFractionError(RichlabError, ZeroDivisionError):
    """Richardson's fraction has a zero denominator."""


class NoBracketError(RichlabError, ValueError):
    """The function does not change sign over the bracket."""


class NonConvergenceError(RichlabError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""


class EvaluationError(RichlabError, ArithmeticError):
    """An objective function returned a non-finite value."""


class IntegrationBlowupError(RichlabError, ArithmeticError):
    """A Runge-Kutta stage produced a non-finite value.

    Attributes
    ----------
    t : float
        Time at the start of the failing step.
    stage : int
        Zero-based index of the offending stage.
    """

    def __init__(self, t, stage, message=None):
        self.t = t
        self.stage = stage
        super().__init__(message or f"non-finite stage value at t={t!r}, stage {stage}")


class EventLocationError(RichlabError, RuntimeError):
    """Ground impact could not be bracketed inside the final step."""


class NonTerminationError(RichlabError, RuntimeError):
    """A trajectory exceeded the maximum flight time."""


class DragTableFormatError(RichlabError, ValueError):
    """A drag table file is malformed.

    Attributes
    ----------
    line : int or None
        One-based line number of the offending row, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientKnotsError(DragTableFormatError):
    """A drag table has fewer than four rows."""


class SingularityError(RichlabError, ArithmeticError):
    """Two ions coincide, so the Coulomb field is undefined."""


class ConstraintFailureError(RichlabError, RuntimeError):
    """SHAKE failed to meet the constraint tolerance.

    Attributes
    ----------
    step : int
        Index of the step that failed.
    residual : float
        Relative constraint residual when the solver gave up.
    """

    def __init__(self, step, residual, message=None):
        self.step = step
        self.residual = residual
        super().__init__(
            message or f"constraint solver failed at step {step} (residual {residual:.3e})"
        )


class SweepFormatError(RichlabError, ValueError):
    """A sample-sweep CSV file is malformed or violates the halving invariant."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
