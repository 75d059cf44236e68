"""Exception and warning types raised across the package."""


class SurvR2D2Error(Exception):
    """Base class for all package errors."""


class DataValidationError(SurvR2D2Error, ValueError):
    """Input data violates a structural requirement."""


class DegenerateColumn(DataValidationError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"covariate column {column!r} has zero standard deviation "
                         "over uncensored rows")


class TooFewEvents(DataValidationError):
    def __init__(self, n_events):
        self.n_events = n_events
        super().__init__(f"need at least 2 uncensored observations, got {n_events}")


class NonFiniteResult(SurvR2D2Error, ArithmeticError):
    pass


class NoConvergence(SurvR2D2Error, RuntimeError):
    pass


class OutOfSupport(SurvR2D2Error, ValueError):
    pass


class InvalidParams(SurvR2D2Error, ValueError):
    pass


class EmptyRegion(SurvR2D2Error, ValueError):
    pass


class InfeasibleRegion(SurvR2D2Error, RuntimeError):
    """Intersected truncation bounds for a coefficient are empty."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class ChainDiverged(SurvR2D2Error, RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class LengthMismatch(SurvR2D2Error, ValueError):
    pass


class DimensionMismatch(SurvR2D2Error, ValueError):
    pass


class OneClassOnly(SurvR2D2Error, ValueError):
    pass


class NoComparablePairs(SurvR2D2Error, ValueError):
    pass


class AlignmentError(SurvR2D2Error, ValueError):
    pass


class SeparationWarning(UserWarning):
    """Logistic mediator model shows (quasi-)separation or collapsed acceptance."""


class RankDeficientWarning(UserWarning):
    pass


class IllConditionedPriorWarning(UserWarning):
    pass
