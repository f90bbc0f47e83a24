"""Exception hierarchy.

Every error raised on purpose by the package derives from `CritMetricError`,
so callers (the CLI in particular) can map failures onto exit codes.
"""


class CritMetricError(Exception):
    """Base class for all package errors."""


class PreconditionViolation(CritMetricError):
    """An operation was called outside the hypotheses it is defined under."""


class NotFourDimensional(PreconditionViolation):
    pass


class PositiveDefinitenessViolation(CritMetricError):
    """A metric failed the Cholesky test at some probe point."""


class SingularMetric(CritMetricError):
    pass


class OracleOrderUnsupported(CritMetricError):
    pass


class NotWeyl(CritMetricError):
    """Input to the Λ² splitting is not totally trace-free."""


class NumericalNonConvergence(CritMetricError):
    """Base for failures of an iterative numerical scheme."""


class StepUnderflow(NumericalNonConvergence):
    """Richardson extrapolation could not reach the requested tolerance.

    ``partial`` carries the best estimate obtained before giving up.
    """

    def __init__(self, message, partial=None, error_estimate=None):
        super().__init__(message)
        self.partial = partial
        self.error_estimate = error_estimate


class QuadratureNotConverged(NumericalNonConvergence):
    pass
