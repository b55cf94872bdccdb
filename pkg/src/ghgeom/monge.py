"""Geometry of a hypersurface in R^4 given as the graph of a field S on R^3.

With p = grad S and a = sqrt(1 + |p|^2) the graph has

    g_ij = delta_ij + p_i p_j
    h_ij = o * d_i d_j S / a
    N    = o * (-p, 1) / a
    Gamma^k_ij = d_i d_j S * p_k / a^2

where o = -1 selects the downward normal (the default, which matches the
closed forms in :mod:`ghsurface`). Curvature tensors follow from the Gauss
equation R_ijkl = h_ik h_jl - h_il h_jk.

Array index conventions: ``christoffel[k, i, j]`` is Gamma^k_ij and
``riemann[i, j, k, l]`` is R_ijkl.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, NamedTuple

import numpy as np

from . import numerics
from .errors import DerivativeFailure

DOWNWARD = -1
UPWARD = 1


def as_point(x) -> np.ndarray:
    """Validate a state point (x1, x2, x3) and return it as a float array."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (3,):
        raise ValueError(f"a state point has 3 coordinates, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"state point has non-finite coordinates: {x}")
    return x


@dataclass(frozen=True)
class ScalarField:
    """A scalar field on an open set of R^3 with optional analytic derivatives.

    When ``gradient``/``hessian`` are missing, or ``use_fd`` is set, the
    derivatives come from central finite differences.
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    use_fd: bool = False
    fd_step: float | None = None
    name: str = "field"

    def __call__(self, x) -> float:
        return self.value(as_point(x))

    @property
    def finite_differences(self) -> bool:
        return self.use_fd or self.gradient is None or self.hessian is None

    def with_fd(self, fd_step: float | None = None) -> "ScalarField":
        return ScalarField(self.value, self.gradient, self.hessian, True, fd_step, self.name)

    def derivatives(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = as_point(x)
        if self.finite_differences:
            grad, hess = numerics.finite_diff(self.value, x, self.fd_step)
        else:
            grad = np.asarray(self.gradient(x), dtype=float)
            hess = np.asarray(self.hessian(x), dtype=float)
            hess = 0.5 * (hess + hess.T)
        if grad.shape != (3,) or hess.shape != (3, 3):
            raise DerivativeFailure(f"{self.name}: derivative shapes {grad.shape}, {hess.shape}")
        if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
            raise DerivativeFailure(f"{self.name}: non-finite derivatives at {x}")
        return grad, hess


@dataclass(frozen=True)
class FundamentalForms:
    g: np.ndarray
    h: np.ndarray
    normal: np.ndarray
    a: float
    gradient: np.ndarray = dc_field(repr=False)
    hessian: np.ndarray = dc_field(repr=False)
    orientation: int = DOWNWARD

    @property
    def g_inv(self) -> np.ndarray:
        # Sherman-Morrison inverse of I + p p^T
        p = self.gradient
        return np.eye(3) - np.outer(p, p) / self.a**2


class ShapeSpectrum(NamedTuple):
    principal: np.ndarray  # descending
    mean: np.ndarray  # (e1/3, e2/3, e3)
    mean_paper: np.ndarray  # (9 H1, 9 H2, H3)


@dataclass(frozen=True)
class CurvatureReport:
    """All pointwise invariants at one point.

    ``principal`` is sorted descending. ``mean`` holds H_k normalised so that
    the pencil reads t^3 - 3 H1 t^2 + 3 H2 t - H3; ``mean_paper`` holds the
    alternative scaling (9 H1, 9 H2, H3).
    """

    point: np.ndarray
    forms: FundamentalForms
    principal: np.ndarray
    mean: np.ndarray
    mean_paper: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float

    def as_dict(self) -> dict:
        f = self.forms
        return {
            "point": self.point.tolist(),
            "a": float(f.a),
            "g": f.g.tolist(),
            "h": f.h.tolist(),
            "normal": f.normal.tolist(),
            "principal": self.principal.tolist(),
            "H": self.mean.tolist(),
            "H_paper": self.mean_paper.tolist(),
            "christoffel": self.christoffel.tolist(),
            "riemann": self.riemann.tolist(),
            "ricci": self.ricci.tolist(),
            "rho": float(self.scalar),
        }


def forms_from_derivatives(grad, hess, orientation: int = DOWNWARD) -> FundamentalForms:
    if orientation not in (DOWNWARD, UPWARD):
        raise ValueError("orientation must be -1 or +1")
    p = np.asarray(grad, dtype=float)
    hs = np.asarray(hess, dtype=float)
    a = float(np.sqrt(1.0 + p @ p))
    g = np.eye(3) + np.outer(p, p)
    h = orientation * hs / a
    normal = orientation * np.append(-p, 1.0) / a
    return FundamentalForms(g, h, normal, a, p, hs, orientation)


def fundamental_forms(field: ScalarField, x, orientation: int = DOWNWARD) -> FundamentalForms:
    grad, hess = field.derivatives(x)
    return forms_from_derivatives(grad, hess, orientation)


def shape_spectrum(forms: FundamentalForms) -> ShapeSpectrum:
    lam = np.array(numerics.sym_pencil_eigen(forms.h, forms.g))
    e1 = lam.sum()
    e2 = lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2]
    e3 = lam.prod()
    mean = np.array([e1 / 3.0, e2 / 3.0, e3])
    return ShapeSpectrum(lam, mean, mean * np.array([9.0, 9.0, 1.0]))


def christoffel_from_derivatives(grad, hess) -> np.ndarray:
    p = np.asarray(grad, dtype=float)
    a2 = 1.0 + p @ p
    return np.einsum("k,ij->kij", p, np.asarray(hess, dtype=float)) / a2


def connection_coeffs(field: ScalarField, x) -> np.ndarray:
    """Christoffel symbols of the induced metric, ``out[k, i, j]`` = Gamma^k_ij."""
    grad, hess = field.derivatives(x)
    return christoffel_from_derivatives(grad, hess)


def curvature_tensors(forms: FundamentalForms) -> tuple[np.ndarray, np.ndarray, float]:
    """Riemann (0,4) tensor, Ricci tensor and scalar curvature from the Gauss equation."""
    h = forms.h
    riem = np.einsum("ik,jl->ijkl", h, h) - np.einsum("il,jk->ijkl", h, h)
    ginv = forms.g_inv
    ric = np.einsum("ik,ijkl->jl", ginv, riem)
    ric = 0.5 * (ric + ric.T)
    rho = float(np.einsum("jl,jl->", ginv, ric))
    return riem, ric, rho


def curvature_report(field: ScalarField, x, orientation: int = DOWNWARD) -> CurvatureReport:
    """Evaluate every invariant of the graph of ``field`` at ``x``."""
    x = as_point(x)
    forms = fundamental_forms(field, x, orientation)
    spec = shape_spectrum(forms)
    gamma = christoffel_from_derivatives(forms.gradient, forms.hessian)
    riem, ric, rho = curvature_tensors(forms)
    return CurvatureReport(x, forms, spec.principal, spec.mean, spec.mean_paper, gamma, riem, ric, rho)


def umbilic_defect(forms: FundamentalForms) -> float:
    """min over c of the Frobenius norm of h - c g (zero exactly at umbilical points)."""
    g, h = forms.g, forms.h
    c = float(np.sum(h * g) / np.sum(g * g))
    return float(np.linalg.norm(h - c * g))
