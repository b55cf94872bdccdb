"""Small numerical kernels used throughout the package.

Everything here works on 3x3 symmetric matrices, short state vectors and
one-dimensional integrals; nothing is meant for large problems.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import integrate, optimize

from .errors import (
    NonFiniteState,
    NonRealRoots,
    NoSignChange,
    NotPositiveDefinite,
    StepLimitExceeded,
    ToleranceNotMet,
)

MULTIPLICITY_TOL = 1e-9
MINOR_TOL = 1e-12
DENSITY_FLOOR = 1e-300


def as_sym3(m) -> np.ndarray:
    """Return a read-only symmetric 3x3 float array built from ``m``.

    Only the upper triangle of ``m`` is used.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    up = np.triu(m)
    out = up + np.triu(m, 1).T
    out.setflags(write=False)
    return out


class CubicRoots(NamedTuple):
    """Three real roots, sorted descending."""

    t1: float
    t2: float
    t3: float

    def multiplicities(self, tol: float = MULTIPLICITY_TOL) -> tuple[int, int, int]:
        """Multiplicity of each root, counting neighbours closer than ``tol``."""
        r = np.array(self)
        scale = max(1.0, float(np.max(np.abs(r))))
        return tuple(int(np.sum(np.abs(r - ri) <= tol * scale)) for ri in r)


def _cubic_value(c2, c1, c0, t):
    return ((t + c2) * t + c1) * t + c0


def _polish(c2, c1, c0, t):
    # Newton polish, keeping the iterate only while the residual shrinks.
    best, best_res = t, abs(_cubic_value(c2, c1, c0, t))
    for _ in range(4):
        d = (3.0 * best + 2.0 * c2) * best + c1
        if d == 0.0 or best_res == 0.0:
            break
        cand = best - _cubic_value(c2, c1, c0, best) / d
        res = abs(_cubic_value(c2, c1, c0, cand))
        if res >= best_res:
            break
        best, best_res = cand, res
    return best


def solve_cubic(c2: float, c1: float, c0: float) -> CubicRoots:
    """Real roots of t^3 + c2 t^2 + c1 t + c0 = 0 in the three-real-root case.

    Uses the trigonometric form on the depressed cubic followed by a Newton
    polish of each root. Raises NonRealRoots when a complex pair is detected.
    """
    c2, c1, c0 = float(c2), float(c1), float(c0)
    if not all(math.isfinite(c) for c in (c2, c1, c0)):
        raise ValueError("cubic coefficients must be finite")
    scale = max(abs(c2) / 3.0, math.sqrt(abs(c1)), abs(c0) ** (1.0 / 3.0))
    if scale == 0.0:
        return CubicRoots(0.0, 0.0, 0.0)

    # work with roots of unit magnitude: t = scale * u
    b2, b1, b0 = c2 / scale, c1 / scale / scale, c0 / scale / scale / scale
    shift = -b2 / 3.0
    p = b1 - b2 * b2 / 3.0
    q = 2.0 * b2**3 / 27.0 - b2 * b1 / 3.0 + b0
    eps = 1e-10
    if p >= -eps:
        # only a (near) triple root keeps all three roots real here
        if abs(p) > eps or abs(q) > eps:
            raise NonRealRoots(f"complex root pair for coefficients ({c2}, {c1}, {c0})")
        # the mean of the roots is exact; q alone would cost a cube root of rounding noise
        return CubicRoots(*([scale * shift] * 3))
    else:
        m = math.sqrt(-p / 3.0)
        arg = -q / (2.0 * m**3)
        if abs(arg) > 1.0 + 1e-8:
            raise NonRealRoots(f"complex root pair for coefficients ({c2}, {c1}, {c0})")
        phi = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        roots = [shift + 2.0 * m * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]

    roots = sorted(roots, reverse=True)
    # polish simple roots only; near-multiple roots sit on a flat residual
    gaps = [min(abs(r - o) for o in roots[:i] + roots[i + 1:]) for i, r in enumerate(roots)]
    roots = [_polish(c2, c1, c0, scale * r) if gap > 1e-3 else scale * r for r, gap in zip(roots, gaps)]
    return CubicRoots(*sorted(roots, reverse=True))


def leading_minors(g) -> tuple[float, float, float]:
    g = np.asarray(g, dtype=float)
    return (
        float(g[0, 0]),
        float(g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]),
        float(np.linalg.det(g)),
    )


def sym_pencil_eigen(h, g) -> CubicRoots:
    """Eigenvalues of the symmetric pencil det(h - t g) = 0, descending.

    ``g`` must be positive definite. The pencil is reduced with the Cholesky
    factor g = L L^T and the symmetric matrix L^-1 h L^-T is diagonalised.
    """
    h = as_sym3(h)
    g = as_sym3(g)
    minors = leading_minors(g)
    if min(minors) <= MINOR_TOL:
        raise NotPositiveDefinite(f"leading minors {minors}")
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    m = Linv @ h @ Linv.T
    m = 0.5 * (m + m.T)
    w = np.linalg.eigvalsh(m)
    return CubicRoots(*(float(v) for v in w[::-1]))


def pencil_charpoly(h, g) -> tuple[float, float, float]:
    """Monic coefficients (c2, c1, c0) of det(g^-1 h - t I) up to sign."""
    a = np.linalg.solve(np.asarray(g, float), np.asarray(h, float))
    tr = float(np.trace(a))
    e2 = 0.5 * (tr * tr - float(np.trace(a @ a)))
    return -tr, e2, -float(np.linalg.det(a))


# ---------------------------------------------------------------- ODEs


@dataclass(frozen=True)
class OdeSettings:
    """Integrator configuration.

    ``method`` is ``"dopri45"`` (embedded adaptive Dormand-Prince 5(4)) or
    ``"rk4"`` (classic fixed step).
    """

    method: str = "dopri45"
    rtol: float = 1e-10
    atol: float = 1e-12
    step: float = 1e-2
    max_steps: int = 200_000
    first_step: float | None = None

    def __post_init__(self):
        if self.method not in ("dopri45", "rk4"):
            raise ValueError(f"unknown ODE method {self.method!r}")
        if not (self.rtol > 0 and self.atol > 0 and self.step > 0):
            raise ValueError("ODE tolerances and step must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


class OdeSolution(NamedTuple):
    t: np.ndarray
    y: np.ndarray  # shape (n_samples, m)
    n_rejected: int


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _checked(rhs, t, y):
    dy = np.asarray(rhs(t, y), dtype=float)
    if not np.all(np.isfinite(dy)):
        raise NonFiniteState(f"right-hand side not finite at t={t}")
    return dy


def _dopri_step(rhs, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(_checked(rhs, t + _C[i] * h, yi))
    y_new = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return y_new, err, ks[6]


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol, span):
    # Hairer-Norsett-Wanner starting step heuristic
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    f1 = _checked(rhs, t0 + direction * h0, y1)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: tuple[float, float],
    settings: OdeSettings | None = None,
) -> OdeSolution:
    """Integrate y' = rhs(t, y) over ``t_span`` and return every accepted step.

    For the adaptive method each accepted step has a local error estimate
    within ``atol + rtol*|y|`` componentwise.
    """
    settings = settings or OdeSettings()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (math.isfinite(t0) and math.isfinite(t1)) or t0 == t1:
        raise ValueError("t_span must be a finite nondegenerate interval")
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("initial state not finite")
    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)

    ts, ys = [t0], [y.copy()]
    t = t0
    f = _checked(rhs, t, y)
    rejected = 0

    if settings.method == "rk4":
        n = max(1, int(math.ceil(span / settings.step - 1e-12)))
        if n > settings.max_steps:
            raise StepLimitExceeded(f"{n} fixed steps exceed max_steps={settings.max_steps}")
        h = direction * span / n
        for i in range(n):
            k1 = f
            k2 = _checked(rhs, t + h / 2, y + h / 2 * k1)
            k3 = _checked(rhs, t + h / 2, y + h / 2 * k2)
            k4 = _checked(rhs, t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t1 if i == n - 1 else t0 + (i + 1) * h
            f = _checked(rhs, t, y)
            ts.append(t)
            ys.append(y.copy())
        return OdeSolution(np.array(ts), np.array(ys), 0)

    rtol, atol = settings.rtol, settings.atol
    h = settings.first_step or _initial_step(rhs, t0, y, f, direction, rtol, atol, span)
    steps = 0
    while direction * (t1 - t) > 0:
        if steps >= settings.max_steps:
            raise StepLimitExceeded(f"more than {settings.max_steps} steps before t={t1}")
        steps += 1
        remaining = abs(t1 - t)
        last = h >= remaining * (1 - 1e-12)
        if last:
            h = remaining
        y_new, err, f_new = _dopri_step(rhs, t, y, direction * h, f)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale))
        if not math.isfinite(err_norm):
            raise NonFiniteState(f"error estimate not finite at t={t}")
        if err_norm <= 1.0:
            t = t1 if last else t + direction * h
            y, f = y_new, f_new
            ts.append(t)
            ys.append(y.copy())
            factor = 5.0 if err_norm == 0.0 else min(5.0, 0.9 * err_norm ** -0.2)
            h *= max(1.0, factor)
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err_norm ** -0.2)
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepLimitExceeded(f"step size underflow at t={t}")
    return OdeSolution(np.array(ts), np.array(ys), rejected)


# ---------------------------------------------------------------- quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """``kind`` is ``"adaptive"`` (QUADPACK on center +/- 12 scale) or ``"hermite"``."""

    kind: str = "adaptive"
    nodes: int = 64
    tol: float = 1e-10
    half_width: float = 12.0

    def __post_init__(self):
        if self.kind not in ("adaptive", "hermite"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if self.nodes < 8:
            raise ValueError("quadrature needs at least 8 nodes")
        if not self.tol > 0:
            raise ValueError("quadrature tolerance must be positive")


class QuadResult(NamedTuple):
    value: float
    error: float


def quad_entropy(
    integrand: Callable[[float], float],
    rule: QuadratureRule | None = None,
    center: float = 0.0,
    scale: float = 1.0,
) -> QuadResult:
    """Integrate ``integrand`` over the real line.

    ``center`` and ``scale`` locate the bulk of the integrand (mean and
    standard deviation for a Gaussian-tailed density); the integral is taken
    in the standardised variable z = (y - center)/scale.
    """
    rule = rule or QuadratureRule()
    if not scale > 0:
        raise ValueError("scale must be positive")

    if rule.kind == "hermite":
        def weighted(n):
            z, w = hermgauss(n)
            y = center + math.sqrt(2.0) * scale * z
            vals = np.array([integrand(float(v)) for v in y])
            return float(np.sum(w * np.exp(z * z) * vals) * math.sqrt(2.0) * scale)

        value = weighted(rule.nodes)
        return QuadResult(value, abs(value - weighted(rule.nodes // 2)))

    def standardised(z):
        return integrand(center + scale * z) * scale

    L = rule.half_width
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, info, *msg = integrate.quad(
            standardised, -L, L, epsabs=rule.tol, epsrel=0.0, limit=400, points=[0.0],
            full_output=1,
        )
    # a round-off flag from QUADPACK is harmless when the estimate is within tolerance
    if not (math.isfinite(value) and math.isfinite(err)) or err > rule.tol:
        detail = f" ({msg[0].strip()})" if msg else ""
        raise ToleranceNotMet(f"quadrature error {err:.3g} above tolerance {rule.tol:.3g}{detail}")
    return QuadResult(float(value), float(err))


def xlogx_guard(f: float, fn: Callable[[float], float]) -> float:
    """f * fn(f), with the t ln t -> 0 limit applied below the density floor."""
    if f < DENSITY_FLOOR:
        return 0.0
    return f * fn(f)


# ---------------------------------------------------------------- roots


def find_root(fn: Callable[[float], float], bracket: tuple[float, float], tol: float = 1e-12) -> float:
    """Root of ``fn`` inside a sign-changing bracket (Brent, bisection fallback)."""
    lo, hi = float(bracket[0]), float(bracket[1])
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (math.isfinite(flo) and math.isfinite(fhi)) or np.sign(flo) == np.sign(fhi):
        raise NoSignChange(f"no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})")
    try:
        return float(optimize.brentq(fn, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))
    except RuntimeError:
        pass
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def expand_bracket(fn, lo: float, hi: float, factor: float = 2.0, max_iter: int = 60):
    """Grow [lo, hi] geometrically about its midpoint until ``fn`` changes sign."""
    flo, fhi = fn(lo), fn(hi)
    for _ in range(max_iter):
        if np.sign(flo) != np.sign(fhi):
            return lo, hi
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * factor
        lo, hi = mid - half, mid + half
        flo, fhi = fn(lo), fn(hi)
    raise NoSignChange(f"no sign change found up to [{lo}, {hi}]")


# ---------------------------------------------------------------- derivatives


def default_fd_step(x) -> float:
    return 1e-4 * max(1.0, float(np.max(np.abs(x))))


def finite_diff(field: Callable[[np.ndarray], float], x, h: float | None = None):
    """Central-difference gradient and (symmetrised) Hessian of a scalar field on R^3."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = default_fd_step(x)
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    n = x.size
    e = np.eye(n) * h
    f0 = field(x)
    fp = np.array([field(x + e[i]) for i in range(n)])
    fm = np.array([field(x - e[i]) for i in range(n)])
    grad = (fp - fm) / (2 * h)
    hess = np.empty((n, n))
    for i in range(n):
        hess[i, i] = (fp[i] - 2 * f0 + fm[i]) / (h * h)
        for j in range(i + 1, n):
            d = (
                field(x + e[i] + e[j])
                - field(x + e[i] - e[j])
                - field(x - e[i] + e[j])
                + field(x - e[i] - e[j])
            ) / (4 * h * h)
            hess[i, j] = hess[j, i] = d
    return grad, hess
