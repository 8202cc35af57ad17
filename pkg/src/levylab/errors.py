"""Exception types shared across the package."""


class LevyLabError(Exception):
    """Base class for all levylab errors."""


class ZeroMass(LevyLabError):
    """A measure with zero total charge where positive mass is required."""


class ZeroCharge(LevyLabError):
    """A multiplicator vanishes at an atom location."""


class NotInGroup(LevyLabError):
    """Function is not a valid multiplicator (log not summable)."""


class DomainError(LevyLabError):
    """Argument leaves the domain of a transform (e.g. 1 + z*a(x) <= 0)."""


class DivergentIntegral(LevyLabError):
    """A required integral does not converge."""


class TruncationOverflow(LevyLabError):
    """Tail mass cap unreachable within the atom budget under a hard cap."""


class InsufficientTerms(LevyLabError):
    """Sequence too short for the requested estimator."""


class NormMismatch(LevyLabError):
    """Zero-norms of the two functions differ beyond tolerance."""


class QuadratureFailure(LevyLabError):
    """Adaptive quadrature failed to reach the requested accuracy."""


class EvaluationError(LevyLabError):
    """User-supplied function raised or returned non-finite values."""


class ConfigError(LevyLabError):
    """Invalid experiment configuration."""
