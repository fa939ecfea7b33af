"""Exception types raised by the construction and verification code."""


class ReluminError(ValueError):
    """Base class for every domain error in this package."""


class ShapeMismatch(ReluminError):
    pass


class SeparationViolation(ReluminError):
    """Cluster noise radius is not small against the mean separation."""


class ConeViolation(ReluminError):
    """A cone opening angle reached pi."""


class DegenerateCluster(ReluminError):
    """A class has zero deviation from its own mean."""


class SingularOutputs(ReluminError):
    pass


class SingularWeight(ReluminError):
    pass


class SingularSimplex(ReluminError):
    pass


class SingularReducedMeans(ReluminError):
    pass


class BallSwallowsApex(ReluminError):
    pass


class NoValidInterval(ReluminError):
    """The collapse regime for the bias parameters is empty."""


class RegimeViolation(ReluminError):
    pass


class RankDeficient(ReluminError):
    pass


class NotPSD(ReluminError):
    pass


class NonSmoothPoint(ReluminError):
    """Some preactivation sits too close to the ReLU kink for finite differences."""


class GenerationFailed(ReluminError):
    pass
