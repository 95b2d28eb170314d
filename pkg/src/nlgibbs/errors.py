"""Exception hierarchy shared by all modules."""


class NLGibbsError(Exception):
    """Base class for errors raised by this package."""


class NonPositiveOperator(NLGibbsError, ValueError):
    pass


class DiscretizationTooCoarse(NLGibbsError):
    pass


class NegativeWeight(NLGibbsError, ValueError):
    pass


class NotPositive(NLGibbsError, ValueError):
    pass


class NonHermitian(NLGibbsError, ValueError):
    pass


class DimensionOverflow(NLGibbsError):
    pass


class NotAState(NLGibbsError, ValueError):
    pass


class SupportViolation(NLGibbsError, ValueError):
    pass


class BadDims(NLGibbsError, ValueError):
    pass


class OrderTooLarge(NLGibbsError, ValueError):
    pass


class DegenerateWeights(NLGibbsError):
    pass


class NoConvergence(NLGibbsError):
    pass


class TailTooLarge(NLGibbsError):
    pass


class ConfigError(NLGibbsError, ValueError):
    pass


class IoFailure(NLGibbsError, OSError):
    pass
