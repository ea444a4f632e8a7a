"""Exception hierarchy shared by every module.

Two families matter to callers (and to the CLI exit codes): violated
mathematical preconditions, and numerical methods that ran but failed to
meet their tolerance.
"""


class OperatorError(Exception):
    """Base class for all library errors."""


class PreconditionError(OperatorError):
    """A mathematical precondition of an operation does not hold."""


class ToleranceError(OperatorError):
    """A method ran but its result failed a convergence or residual check."""


class DimensionMismatch(PreconditionError, ValueError):
    pass


class SingularResolvent(PreconditionError):
    pass


class IllConditioned(PreconditionError):
    pass


class NotPositive(PreconditionError):
    pass


class EigenFailure(ToleranceError):
    pass


class InvalidAlpha(PreconditionError, ValueError):
    pass


class InvalidParams(PreconditionError, ValueError):
    pass


class DivergentIntegral(PreconditionError):
    pass


class BranchCutViolation(PreconditionError):
    pass


class IllConditionedSimilarity(ToleranceError):
    pass


class ZeroReference(PreconditionError):
    pass


class NonCommuting(PreconditionError):
    pass


class SingularDeterminant(PreconditionError):
    pass


class SingularDifference(PreconditionError):
    pass


class SingularStep(PreconditionError):
    pass


class OracleFailure(ToleranceError):
    pass


class AdjugateFormulaFailed(ToleranceError):
    """The cofactor resolvent did not invert ``s + Lambda``."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class NotConverged(ToleranceError):
    """Node doubling stopped before successive iterates agreed.

    Carries the last two iterates and their relative distance.
    """

    def __init__(self, message, previous, current, distance):
        super().__init__(message)
        self.previous = previous
        self.current = current
        self.distance = distance
