"""Exception hierarchy."""


class SemiparError(Exception):
    """Base class for all package errors."""


class UnsupportedOrderError(SemiparError, ValueError):
    pass


class DegenerateSampleError(SemiparError, ValueError):
    pass


class QuadratureError(SemiparError, ArithmeticError):
    pass


class DivergentDenominatorError(SemiparError, ArithmeticError):
    """The local fitting denominator integral does not exist."""


class OptimalIndexUndefinedError(SemiparError, ArithmeticError):
    """c1 == 0: the truth is in the parametric family, no optimal index."""


class BandwidthUndefinedError(SemiparError, ArithmeticError):
    pass


class SelectorDegenerateError(SemiparError, ArithmeticError):
    """A data-driven index selector broke down.

    ``fallback_alpha`` is the index callers should use instead.
    """

    def __init__(self, message, fallback_alpha=2.0, trace=None):
        super().__init__(message)
        self.fallback_alpha = fallback_alpha
        self.trace = trace


class StageFailureError(SelectorDegenerateError):
    """A pipeline stage produced a non-positive or non-finite bandwidth."""


class GridTooNarrowError(SemiparError, ValueError):
    pass


class HarnessError(SemiparError, RuntimeError):
    pass


class IngestError(SemiparError, ValueError):
    pass
