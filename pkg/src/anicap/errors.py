"""Exception hierarchy shared by all modules."""


class AnicapError(Exception):
    """Base class for every error raised by the library."""


class InvalidSpec(AnicapError, ValueError):
    pass


class EllipticityViolation(AnicapError):
    """The sampled Hessian of F^2/2 is not positive definite."""


class ZeroDirection(AnicapError, ValueError):
    pass


class InvalidGrid(AnicapError, ValueError):
    pass


class NonPositiveRadius(AnicapError, ValueError):
    pass


class DegenerateMetric(AnicapError):
    pass


class MeanConvexityLost(AnicapError):
    """H_F dropped below the abort threshold somewhere on the surface."""


class StepLimitExceeded(AnicapError):
    pass


class InvalidExponent(AnicapError, ValueError):
    pass


class NotConvex(AnicapError):
    pass


class NonPositiveSupport(AnicapError):
    pass


class HypothesisViolation(AnicapError):
    pass


class NonPositiveUpperLimit(AnicapError, ValueError):
    pass


class PositiveHawkingMass(AnicapError):
    pass


class DegenerateDenominator(AnicapError):
    pass


class CriticalPoint(AnicapError):
    pass


class LevelSetNotFound(AnicapError):
    pass


class ConfigError(AnicapError, ValueError):
    pass
