"""Exception hierarchy.

Every error raised deliberately by this package derives from
:class:`MollifyError`; input-validation errors additionally derive from
``ValueError`` so callers that only care about bad arguments can catch that.
"""


class MollifyError(Exception):
    """Base class for all package errors."""


class NumericalFailure(MollifyError):
    """A numerical procedure could not deliver its contract."""


class ValidationError(MollifyError, ValueError):
    """An argument violates a documented precondition."""


# poly
class NonConvergence(NumericalFailure):
    pass


# ratfun
class RealPole(ValidationError):
    pass


class DegreeCondition(ValidationError):
    pass


class PoleEvaluation(NumericalFailure):
    pass


# kernels
class ZeroIntegral(ValidationError):
    pass


class NonIntegrable(ValidationError):
    pass


class NonPositiveScale(ValidationError):
    pass


class DimensionLimit(ValidationError):
    pass


# convolve
class DimensionMismatch(ValidationError):
    pass


class BudgetExceeded(NumericalFailure):
    pass


class NotEven(ValidationError):
    pass


class NotRadial(ValidationError):
    pass


# approx
class UnboundedSupport(ValidationError):
    pass


class DegreeOverflow(ValidationError):
    pass


class NoConvergence(ValidationError):
    """Taylor expansion requested where the series does not converge."""


class PoleOnInterval(ValidationError):
    pass


class PoleNearInterval(ValidationError):
    pass


class CertificationFailure(NumericalFailure):
    pass
