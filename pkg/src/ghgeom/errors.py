"""Exception hierarchy shared by every module.

The class name doubles as the error case printed by the command-line tool.
"""


class GhGeomError(Exception):
    """Base class for all numerical and domain failures."""


class DomainError(GhGeomError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class OutOfRange(DomainError):
    pass


class NonRealRoots(GhGeomError):
    pass


class NotPositiveDefinite(GhGeomError):
    pass


class StepLimitExceeded(GhGeomError):
    pass


class NonFiniteState(GhGeomError):
    pass


class ToleranceNotMet(GhGeomError):
    pass


class NoSignChange(GhGeomError):
    pass


class DerivativeFailure(GhGeomError):
    pass


class NoConvergence(GhGeomError):
    pass
