"""Exception types shared across the package."""


class QwhitError(Exception):
    pass


class PoleProximity(QwhitError, ValueError):
    """Evaluation point lies within the pole-proximity radius."""


class QuadratureFailure(QwhitError, ArithmeticError):
    """The quadrature error estimate did not reach the requested tolerance."""


class BudgetExceeded(QuadratureFailure):
    pass


class NonDecayingTail(QuadratureFailure):
    """A contour ray does not decay, so the integral is not absolutely convergent."""


class NoSeparatingPath(QwhitError, ValueError):
    pass


class RankUnsupported(QwhitError, ValueError):
    pass


class ShiftUnsupported(QwhitError, ValueError):
    pass


class ExtrapolationUnstable(QwhitError, ArithmeticError):
    pass


class BalancingViolated(QwhitError, ValueError):
    pass
