"""Closed forms for the entropy hypersurface S(x1, x2, x3) = x1 x3 - x2.

Coordinates are x1 = thermal pressure coefficient, x2 = heat capacity and
x3 = volume. Every invariant depends on x1 and x3 only, through the
normalizer a = sqrt(2 + x1^2 + x3^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, OutOfRange
from .monge import CurvatureReport, FundamentalForms, ScalarField, as_point

SQRT2 = math.sqrt(2.0)


def entropy(x) -> float:
    x = as_point(x)
    return float(x[0] * x[2] - x[1])


def normalizer(x) -> float:
    x = as_point(x)
    return math.sqrt(2.0 + x[0] ** 2 + x[2] ** 2)


class GhPoint(NamedTuple):
    x: np.ndarray
    a: float


def gh_point(x) -> GhPoint:
    x = as_point(x)
    return GhPoint(x, normalizer(x))


def _gradient(x):
    return np.array([x[2], -1.0, x[0]])


_HESSIAN = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])


def entropy_field(use_fd: bool = False) -> ScalarField:
    """The entropy as a :class:`ScalarField` with exact derivatives."""
    return ScalarField(
        value=lambda x: float(x[0] * x[2] - x[1]),
        gradient=_gradient,
        hessian=lambda x: _HESSIAN,
        use_fd=use_fd,
        name="entropy",
    )


def closed_forms(x) -> FundamentalForms:
    x1, _, x3 = as_point(x)
    a = math.sqrt(2.0 + x1 * x1 + x3 * x3)
    g = np.array([
        [1.0 + x3 * x3, -x3, x1 * x3],
        [-x3, 2.0, -x1],
        [x1 * x3, -x1, 1.0 + x1 * x1],
    ])
    h = np.array([[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]) / a
    normal = np.array([x3, -1.0, x1, -1.0]) / a
    return FundamentalForms(g, h, normal, a, np.array([x3, -1.0, x1]), _HESSIAN.copy(), -1)


def principal_curvatures(x) -> tuple[float, float, float]:
    """(lambda1 > 0, lambda2 < 0, lambda3 = 0) in the positive/negative/null labelling."""
    x1, _, x3 = as_point(x)
    a2 = 2.0 + x1 * x1 + x3 * x3
    a3 = a2 ** 1.5
    r = math.sqrt((2.0 + x1 * x1) * (2.0 + x3 * x3))
    # lambda1 * lambda2 = -2/a^4; use it to dodge cancellation in the smaller root
    if x1 * x3 >= 0.0:
        lam1 = (x1 * x3 + r) / a3
        lam2 = -2.0 / (a2 * a2 * lam1)
    else:
        lam2 = (x1 * x3 - r) / a3
        lam1 = -2.0 / (a2 * a2 * lam2)
    return lam1, lam2, 0.0


def closed_christoffel(x) -> np.ndarray:
    x1, _, x3 = as_point(x)
    a2 = 2.0 + x1 * x1 + x3 * x3
    gamma = np.zeros((3, 3, 3))
    for k, v in enumerate((x3 / a2, -1.0 / a2, x1 / a2)):
        gamma[k, 0, 2] = gamma[k, 2, 0] = v
    return gamma


def closed_curvatures(x) -> CurvatureReport:
    x = as_point(x)
    x1, _, x3 = x
    forms = closed_forms(x)
    a2 = 2.0 + x1 * x1 + x3 * x3
    a3 = a2**1.5
    a4 = a2 * a2
    lam1, lam2, lam3 = principal_curvatures(x)

    riem = np.zeros((3, 3, 3, 3))
    r = -1.0 / a2
    riem[0, 2, 0, 2] = riem[2, 0, 2, 0] = r
    riem[0, 2, 2, 0] = riem[2, 0, 0, 2] = -r
    ricci = -np.array([
        [2.0 + x3 * x3, 0.0, x1 * x3],
        [0.0, 0.0, 0.0],
        [x1 * x3, 0.0, 2.0 + x1 * x1],
    ]) / a4
    mean = np.array([2.0 * x1 * x3 / (3.0 * a3), -2.0 / (3.0 * a4), 0.0])
    mean_paper = np.array([6.0 * x1 * x3 / a3, -6.0 / a4, 0.0])
    return CurvatureReport(
        point=x,
        forms=forms,
        principal=np.array([lam1, lam3, lam2]),
        mean=mean,
        mean_paper=mean_paper,
        christoffel=closed_christoffel(x),
        riemann=riem,
        ricci=ricci,
        scalar=-4.0 / a4,
    )


def scalar_curvature(x) -> float:
    x1, _, x3 = as_point(x)
    return -4.0 / (2.0 + x1 * x1 + x3 * x3) ** 2


# ---------------------------------------------------------------- level sets


def rho_level_radius(rho: float) -> float:
    """Cylinder radius R for the nominal curvature level rho = -4/(R^2 + 2).

    The level label is not the curvature attained on the cylinder, which is
    -4/(R^2 + 2)^2; see :func:`cylinder_scalar_curvature`.
    """
    if not (-1.0 <= rho < 0.0):
        raise OutOfRange(f"scalar curvature level {rho} outside [-1, 0)")
    return math.sqrt(max(0.0, -4.0 / rho - 2.0))


def cylinder_scalar_curvature(radius: float) -> float:
    """Scalar curvature on the cylinder x1^2 + x3^2 = radius^2."""
    return -4.0 / (radius * radius + 2.0) ** 2


@dataclass(frozen=True)
class LevelSetSpec:
    """Entropy level ``level`` (S = c) crossed with the curvature cylinder of radius ``radius``."""

    level: float
    radius: float
    samples: int = 200

    def __post_init__(self):
        if not self.radius >= SQRT2:
            raise OutOfRange(f"cylinder radius {self.radius} below sqrt(2)")
        if self.samples < 2:
            raise ValueError("need at least 2 samples")
        if not math.isfinite(self.level):
            raise ValueError("entropy level must be finite")

    @property
    def rho_level(self) -> float:
        """Nominal level label -4/(R^2 + 2), the inverse of :func:`rho_level_radius`."""
        return -4.0 / (self.radius**2 + 2.0)

    @property
    def scalar_curvature(self) -> float:
        return cylinder_scalar_curvature(self.radius)


class IntersectionSample(NamedTuple):
    theta: float
    point: np.ndarray
    mate: float  # mate heat capacity R^2 cos(2 theta) / 2


def intersection_arrays(spec: LevelSetSpec):
    """Vectorised intersection curve: (theta, points (n, 3), mate)."""
    n, R, c = spec.samples, spec.radius, spec.level
    theta = np.pi * (np.arange(n) + 0.5) / n
    pts = np.column_stack([
        R * np.cos(theta),
        0.5 * R * R * np.sin(2.0 * theta) - c,
        R * np.sin(theta),
    ])
    return theta, pts, 0.5 * R * R * np.cos(2.0 * theta)


def intersection_curve(spec: LevelSetSpec) -> list[IntersectionSample]:
    theta, pts, mate = intersection_arrays(spec)
    return [IntersectionSample(float(t), p, float(m)) for t, p, m in zip(theta, pts, mate)]


# ---------------------------------------------------------------- nu-deformation


@dataclass(frozen=True)
class NuFunction:
    """A smooth increasing scale function nu: (0, inf) -> (0, inf).

    Use the constructors; ``d1``/``d2`` are None for custom functions, whose
    derivatives are then taken numerically.
    """

    kind: str
    fn: Callable[[float], float]
    d1: Callable[[float], float] | None = None
    d2: Callable[[float], float] | None = None
    params: tuple = ()

    def __call__(self, t: float) -> float:
        if not t > 0:
            raise DomainError(f"nu is defined on (0, inf), got {t}")
        return self.fn(t)

    @classmethod
    def identity(cls) -> "NuFunction":
        return cls("identity", lambda t: t, lambda t: 1.0, lambda t: 0.0)

    @classmethod
    def power(cls, alpha: float) -> "NuFunction":
        if not alpha > 0:
            raise DomainError(f"power exponent must be positive, got {alpha}")
        return cls(
            "power",
            lambda t: t**alpha,
            lambda t: alpha * t ** (alpha - 1.0),
            lambda t: alpha * (alpha - 1.0) * t ** (alpha - 2.0),
            (alpha,),
        )

    @classmethod
    def exp_type(cls, base: float, b: float) -> "NuFunction":
        """nu(t) = base**(t**b) - 1 with base > 1 and b > 0."""
        if not (base > 1 and b > 0):
            raise DomainError(f"exp-type nu needs base > 1 and b > 0, got ({base}, {b})")
        lb = math.log(base)

        def d1(t):
            return lb * b * t ** (b - 1.0) * base ** (t**b)

        def d2(t):
            return lb * base ** (t**b) * (b * (b - 1.0) * t ** (b - 2.0) + lb * b * b * t ** (2.0 * b - 2.0))

        return cls("exp", lambda t: base ** (t**b) - 1.0, d1, d2, (base, b))

    @classmethod
    def custom(cls, fn: Callable[[float], float]) -> "NuFunction":
        grid = np.logspace(-6, 6, 64)
        vals = np.array([fn(float(t)) for t in grid])
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0) or np.any(np.diff(vals) <= 0):
            raise DomainError("custom nu must be positive and strictly increasing on (0, inf)")
        if not (fn(1e-12) < 1e-3 * fn(1.0) and fn(1e12) > 1e3 * fn(1.0)):
            raise DomainError("custom nu must tend to 0 at 0+ and to infinity at infinity")
        return cls("custom", fn)

    def derivatives(self, t: float) -> tuple[float, float]:
        if self.d1 is not None and self.d2 is not None:
            return self.d1(t), self.d2(t)
        h = 1e-4 * max(1.0, t)
        h = min(h, 0.5 * t)
        fp, f0, fm = self(t + h), self(t), self(t - h)
        return (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)


def nu_entropy(nu: NuFunction, x) -> float:
    """S^nu = nu(x3) * x1 - x2 (requires x3 > 0)."""
    x1, x2, x3 = as_point(x)
    if not x3 > 0:
        raise DomainError(f"nu-entropy needs positive volume, got x3={x3}")
    return float(nu(x3) * x1 - x2)


def nu_patch(nu: NuFunction) -> ScalarField:
    """Field x -> nu(x3) x1 - x2 with exact derivatives in terms of nu', nu''."""

    def value(x):
        return nu_entropy(nu, x)

    def gradient(x):
        if not x[2] > 0:
            raise DomainError(f"nu-patch needs positive volume, got x3={x[2]}")
        d1, _ = nu.derivatives(x[2])
        return np.array([nu(x[2]), -1.0, d1 * x[0]])

    def hessian(x):
        if not x[2] > 0:
            raise DomainError(f"nu-patch needs positive volume, got x3={x[2]}")
        d1, d2 = nu.derivatives(x[2])
        return np.array([[0.0, 0.0, d1], [0.0, 0.0, 0.0], [d1, 0.0, d2 * x[0]]])

    return ScalarField(value, gradient, hessian, name=f"nu-{nu.kind}")

