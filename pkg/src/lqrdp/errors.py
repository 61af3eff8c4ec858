"""Exception hierarchy shared by every module."""


class LQRError(Exception):
    """Base class for all package errors."""


class DimensionError(LQRError, ValueError):
    """Matrix shapes are inconsistent."""


class NotPositiveDefiniteError(LQRError, ValueError):
    """A matrix required to be positive definite is not."""


class InvalidPlantError(LQRError, ValueError):
    """Plant weights or discount violate the standing assumptions."""


class DomainError(LQRError, ValueError):
    """A Q-parameter lies outside the set where an operator is defined.

    Raised for instance when the lower-right block ``P22`` is singular, so
    the greedy gain does not exist.
    """


class StabilityError(LQRError):
    """A gain or matrix that must be Schur stable is not."""


class ConvergenceError(LQRError):
    """An iterative routine hit its iteration cap without converging."""


class CertificationError(LQRError):
    """A certificate cannot be constructed from the data supplied."""
