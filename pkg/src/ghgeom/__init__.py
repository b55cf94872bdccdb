"""Geometry and entropy-equivalence engine for the Gibbs-Helmholtz entropy surface."""

from .errors import GhGeomError

__version__ = "0.1.0"

__all__ = ["GhGeomError", "__version__"]
