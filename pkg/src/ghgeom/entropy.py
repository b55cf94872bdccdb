"""Generalized logarithms and the Gaussian solutions of the entropy equivalence equations.

For a family of densities f(x, .) on the real line and a logarithm phi the
equivalence equation reads

    S(x) + integral f(x, y) phi(f(x, y)) dy = 0

with S the thermodynamic entropy. For normal densities the integral depends
on the dispersion only, which gives closed-form dispersions for the natural,
Tsallis and Kaniadakis logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import ghsurface, numerics
from .errors import DomainError, NoSignChange, ToleranceNotMet
from .monge import as_point
from .numerics import QuadratureRule, QuadResult

SQRT_2PI = math.sqrt(2.0 * math.pi)
SIGMA_BOUNDS = (1e-100, 1e100)


@dataclass(frozen=True)
class GeneralizedLog:
    """One of natural / tsallis(q) / kaniadakis(k), or a caller-supplied logarithm."""

    kind: str
    param: float | None = None
    fn: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.kind == "natural":
            return
        if self.kind == "tsallis":
            if self.param is None or not math.isfinite(self.param) or self.param == 1.0:
                raise DomainError(f"Tsallis logarithm needs a finite q != 1, got {self.param}")
        elif self.kind == "kaniadakis":
            k = self.param
            if k is None or not (-1.0 < k < 1.0) or k == 0.0:
                raise DomainError(f"Kaniadakis logarithm needs k in (-1, 1) without 0, got {k}")
        elif self.kind == "custom":
            if self.fn is None:
                raise ValueError("custom logarithm needs a function")
        else:
            raise ValueError(f"unknown logarithm kind {self.kind!r}")

    @classmethod
    def natural(cls) -> "GeneralizedLog":
        return cls("natural")

    @classmethod
    def tsallis(cls, q: float) -> "GeneralizedLog":
        return cls("tsallis", float(q))

    @classmethod
    def kaniadakis(cls, k: float) -> "GeneralizedLog":
        return cls("kaniadakis", float(k))

    @classmethod
    def custom(cls, fn: Callable[[float], float]) -> "GeneralizedLog":
        return cls("custom", None, fn)

    def __call__(self, z: float) -> float:
        return glog(self, z)

    def label(self) -> str:
        if self.kind == "tsallis":
            return f"tsallis(q={self.param:g})"
        if self.kind == "kaniadakis":
            return f"kaniadakis(k={self.param:g})"
        return self.kind


def glog(phi: GeneralizedLog, z: float) -> float:
    if not z > 0:
        raise DomainError(f"logarithm argument must be positive, got {z}")
    if phi.kind == "natural":
        return math.log(z)
    if phi.kind == "tsallis":
        e = 1.0 - phi.param
        # (z^e - 1)/e without cancellation for small e
        return math.expm1(e * math.log(z)) / e
    if phi.kind == "kaniadakis":
        k = phi.param
        return math.sinh(k * math.log(z)) / k
    return float(phi.fn(z))


# ---------------------------------------------------------------- Gaussian family


@dataclass(frozen=True)
class GaussianFamily:
    """Normal densities with mean ``mean(x)`` and dispersion ``sigma(x)`` over state points."""

    mean: Callable[[np.ndarray], float]
    sigma: Callable[[np.ndarray], float]

    @classmethod
    def solving(
        cls,
        phi: GeneralizedLog,
        mean: Callable[[np.ndarray], float] | float = 0.0,
        entropy_fn: Callable[[np.ndarray], float] = ghsurface.entropy,
    ) -> "GaussianFamily":
        """The family whose dispersion is the closed-form solution for ``phi``."""
        mu = mean if callable(mean) else (lambda x, m=float(mean): m)
        return cls(mu, lambda x: sigma_closed(phi, entropy_fn(x)))

    def params(self, x) -> tuple[float, float]:
        mu, s = float(self.mean(x)), float(self.sigma(x))
        if not (s > 0 and math.isfinite(s)):
            raise DomainError(f"dispersion must be positive and finite, got {s}")
        return mu, s


def normal_pdf(y: float, mu: float, sigma: float) -> float:
    z = (y - mu) / sigma
    return math.exp(-0.5 * z * z) / (SQRT_2PI * sigma)


def gaussian_pdf(family: GaussianFamily, x, y: float) -> float:
    mu, s = family.params(x)
    return normal_pdf(y, mu, s)


# ---------------------------------------------------------------- closed forms


def sigma_closed(phi: GeneralizedLog, S: float) -> float:
    """Dispersion of the normal density solving the equivalence equation at entropy ``S``."""
    S = float(S)
    if phi.kind == "natural":
        return math.exp(S - 0.5) / SQRT_2PI
    if phi.kind == "tsallis":
        q = phi.param
        if q >= 2.0:
            raise DomainError(f"Tsallis closed form needs q < 2 (integrals diverge), got q={q}")
        base = 1.0 + (q - 1.0) * S
        if not base > 0:
            raise DomainError(f"Tsallis closed form needs 1 + (q-1) S > 0, got {base}")
        # (2-q)^(1/(2(q-1))) * base^(1/(q-1)), via logs
        return math.exp((0.5 * math.log(2.0 - q) + math.log(base)) / (q - 1.0)) / SQRT_2PI
    if phi.kind == "kaniadakis":
        k = phi.param
        kS = k * S
        c = 1.0 / math.sqrt(1.0 - k * k)
        root = math.sqrt(kS * kS + c)
        # kS + root, rationalised when kS < 0
        s = kS + root if kS >= 0 else c / (root - kS)
        u = math.sqrt(1.0 - k) * s
        return math.exp(math.log(u) / k) / SQRT_2PI
    raise DomainError(f"no closed-form dispersion for the {phi.kind} logarithm")


def gaussian_power_integral(p: float, sigma: float) -> float:
    """Integral of f^p over the line for f = N(mu, sigma^2), p > 0."""
    return (2.0 * math.pi * sigma * sigma) ** ((1.0 - p) / 2.0) / math.sqrt(p)


# ---------------------------------------------------------------- residuals


class EquivalenceResidual(NamedTuple):
    point: np.ndarray
    entropy: float
    integral: float
    residual: float
    error: float
    sigma: float
    mean: float

    def as_dict(self) -> dict:
        return {
            "point": self.point.tolist(),
            "entropy": self.entropy,
            "mean": self.mean,
            "sigma": self.sigma,
            "integral": self.integral,
            "residual": self.residual,
            "quad_error": self.error,
        }


def entropy_integral(phi: GeneralizedLog, mu: float, sigma: float, rule: QuadratureRule | None = None) -> QuadResult:
    """Integral of f phi(f) for f = N(mu, sigma^2)."""

    def integrand(y):
        return numerics.xlogx_guard(normal_pdf(y, mu, sigma), phi)

    return numerics.quad_entropy(integrand, rule, center=mu, scale=sigma)


def equivalence_residual(
    phi: GeneralizedLog,
    family: GaussianFamily,
    x,
    rule: QuadratureRule | None = None,
    entropy_fn: Callable[[np.ndarray], float] = ghsurface.entropy,
) -> EquivalenceResidual:
    """S(x) + integral f phi(f) dy, with the quadrature error estimate."""
    x = as_point(x)
    S = float(entropy_fn(x))
    mu, s = family.params(x)
    q = entropy_integral(phi, mu, s, rule)
    return EquivalenceResidual(x, S, q.value, S + q.value, q.error, s, mu)


def sigma_solve(phi: GeneralizedLog, S: float, tol: float = 1e-10, rule: QuadratureRule | None = None) -> float:
    """Dispersion solving the equivalence equation by quadrature and root finding.

    Independent of :func:`sigma_closed`: the bracket is grown geometrically
    from sigma = 1 in log-space and the residual is evaluated numerically.
    """
    rule = rule or QuadratureRule(tol=min(1e-10, tol / 10))

    def residual(log_sigma):
        return S + entropy_integral(phi, 0.0, math.exp(log_sigma), rule).value

    lo_lim, hi_lim = (math.log(b) for b in SIGMA_BOUNDS)
    lo, hi = -1.0, 1.0
    flo, fhi = residual(lo), residual(hi)
    while np.sign(flo) == np.sign(fhi):
        # an end whose integral can no longer be resolved is treated as exhausted
        if lo > lo_lim:
            try:
                lo, flo = max(lo_lim, 2.0 * lo), residual(max(lo_lim, 2.0 * lo))
            except ToleranceNotMet:
                lo_lim = lo
        if np.sign(flo) != np.sign(fhi):
            break
        if hi < hi_lim:
            try:
                hi, fhi = min(hi_lim, 2.0 * hi), residual(min(hi_lim, 2.0 * hi))
            except ToleranceNotMet:
                hi_lim = hi
        if lo <= lo_lim and hi >= hi_lim and np.sign(flo) == np.sign(fhi):
            raise NoSignChange(f"no dispersion solves the {phi.label()} equation at S={S}")
    log_sigma = numerics.find_root(residual, (lo, hi), tol=1e-14)
    return math.exp(log_sigma)


def mu_independence_check(
    phi: GeneralizedLog, S: float, mu_values, rule: QuadratureRule | None = None
) -> float:
    """Spread (max - min) of the equivalence residual across mean shifts at fixed S."""
    s = sigma_closed(phi, S)
    res = [S + entropy_integral(phi, float(mu), s, rule).value for mu in mu_values]
    return float(max(res) - min(res)) if res else 0.0
