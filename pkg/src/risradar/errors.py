"""Exception types raised across the package."""


class RisRadarError(Exception):
    """Base class for all package errors."""


class DomainError(RisRadarError, ValueError):
    """An argument lies outside the domain of the operation."""


class GeometryError(RisRadarError, ValueError):
    """Degenerate placement, e.g. an antenna coincident with an RIS element."""


class ShapeError(RisRadarError, ValueError):
    """Array dimensions do not agree."""


class SingularEstimationError(RisRadarError, ArithmeticError):
    """Least-squares response estimation is rank deficient beyond repair."""


class InfeasibleHypothesisError(RisRadarError):
    """No admissible delay assignment exists for a hypothesis."""


class ConvergenceError(RisRadarError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The best iterate found so far is attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SearchSpaceTooLarge(RisRadarError):
    """Exhaustive enumeration refused because the space is too big."""


class ConfigError(RisRadarError, ValueError):
    """An experiment configuration failed validation."""
