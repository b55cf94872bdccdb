"""Geodesics of the entropy hypersurface.

The only non-null Christoffel symbols are Gamma^k_13, so the geodesic system
reduces to

    x1'' = -(2 x3 / a^2) x1' x3'
    x2'' = +(2 / a^2)    x1' x3'
    x3'' = -(2 x1 / a^2) x1' x3'

State vectors are laid out as (x1, x2, x3, v1, v2, v3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import monge, numerics
from .errors import NoConvergence
from .numerics import OdeSettings

SHOOT_SETTINGS = OdeSettings(rtol=1e-12, atol=1e-13)
JACOBIAN_STEP = 1e-5
MAX_NEWTON = 50
RESTARTS = 8
# misses below this many ulps of the target scale are roundoff, not progress
ROUNDOFF_ULPS = 256


class GeodesicState(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    t: float = 0.0

    def vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.position, float), np.asarray(self.velocity, float)])


def geodesic_rhs(state) -> np.ndarray:
    """Time derivative of one state vector, or of a batch with shape (..., 6)."""
    y = np.asarray(state, dtype=float)
    x1, x3 = y[..., 0], y[..., 2]
    v = y[..., 3:6]
    w = 2.0 * v[..., 0] * v[..., 2] / (2.0 + x1 * x1 + x3 * x3)
    acc = np.stack([-x3 * w, w, -x1 * w], axis=-1)
    return np.concatenate([v, acc], axis=-1)


def field_rhs(field: monge.ScalarField) -> Callable[[float, np.ndarray], np.ndarray]:
    """Geodesic right-hand side of an arbitrary graph, via its Christoffel symbols."""

    def rhs(t, y):
        gamma = monge.connection_coeffs(field, y[:3])
        v = y[3:]
        return np.concatenate([v, -np.einsum("kij,i,j->k", gamma, v, v)])

    return rhs


def metric_energy(x, v) -> np.ndarray:
    """g(v, v) = |v|^2 + (grad S . v)^2, vectorised over leading axes."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    dS = x[..., 2] * v[..., 0] - v[..., 1] + x[..., 0] * v[..., 2]
    return np.sum(v * v, axis=-1) + dS * dS


@dataclass(frozen=True)
class GeodesicPath:
    t: np.ndarray
    x: np.ndarray  # (n, 3)
    v: np.ndarray  # (n, 3)
    energy: np.ndarray
    arclen: np.ndarray

    @classmethod
    def from_samples(cls, t, x, v) -> "GeodesicPath":
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        v = np.asarray(v, dtype=float).reshape(-1, 3)
        energy = metric_energy(x, v)
        speed = np.sqrt(energy)
        arclen = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(t))])
        return cls(t, x, v, energy, arclen)

    @property
    def end(self) -> GeodesicState:
        return GeodesicState(self.x[-1], self.v[-1], float(self.t[-1]))

    def energy_drift(self) -> float:
        """max |E(t) - E(0)| / E(0)."""
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / e0) if e0 > 0 else float(np.max(self.energy))

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], *self.x[i], *self.v[i], self.energy[i], self.arclen[i])


def integrate_geodesic(init: GeodesicState, t_end: float, settings: OdeSettings | None = None) -> GeodesicPath:
    if not t_end > init.t:
        raise ValueError("t_end must exceed the initial time")
    sol = numerics.integrate_ode(lambda t, y: geodesic_rhs(y), init.vector(), (init.t, t_end), settings)
    return GeodesicPath.from_samples(sol.t, sol.y[:, :3], sol.y[:, 3:])


def arc_length(path: GeodesicPath) -> float:
    """Riemannian length by the composite trapezoid rule over the samples."""
    if len(path.t) == 0:
        raise ValueError("empty path")
    return float(path.arclen[-1])


# ---------------------------------------------------------------- diagonal family


def diagonal_invariant(z):
    """z sqrt(z^2 + 1) + asinh(z); affine in t along diagonal geodesics x1 = x3."""
    z = np.asarray(z, dtype=float)
    return z * np.sqrt(z * z + 1.0) + np.arcsinh(z)


def diagonal_geodesic(k9: float, k10: float, t: float) -> float:
    """x1(t) on the diagonal family, inverting the invariant at k9 t + k10."""
    target = k9 * t + k10
    if target == 0.0:
        return 0.0

    def residual(z):
        return float(diagonal_invariant(z)) - target

    # |invariant(z)| >= z^2 and >= 2|z| up to |z| = 1, so the root lies within this bound
    bound = max(1.0, math.sqrt(abs(target)))
    lo, hi = (0.0, bound) if target > 0 else (-bound, 0.0)
    lo, hi = numerics.expand_bracket(residual, lo, hi)
    z = numerics.find_root(residual, (lo, hi), tol=1e-15)
    # one Newton polish; invariant'(z) = 2 sqrt(z^2 + 1)
    return float(z - residual(z) / (2.0 * math.sqrt(z * z + 1.0)))


# ---------------------------------------------------------------- shooting


@dataclass(frozen=True)
class ShootResult:
    velocity: np.ndarray
    miss: float
    iterations: int
    converged: bool
    path: GeodesicPath
    restarts: int = 0


def _endpoints(start: np.ndarray, velocities: np.ndarray, settings: OdeSettings) -> np.ndarray:
    """Positions at t = 1 for a batch of initial velocities, integrated together."""
    n = len(velocities)
    y0 = np.concatenate([np.tile(start, (n, 1)), velocities], axis=1).ravel()

    def rhs(t, y):
        return geodesic_rhs(y.reshape(n, 6)).ravel()

    sol = numerics.integrate_ode(rhs, y0, (0.0, 1.0), settings)
    return sol.y[-1].reshape(n, 6)[:, :3]


def _roundoff_floor(target) -> float:
    return ROUNDOFF_ULPS * np.finfo(float).eps * max(1.0, float(np.max(np.abs(target))))


def _newton(start, target, v0, tol, max_iter, settings):
    """Damped Newton on v -> x(1; v) - target. Returns (v, miss, iterations)."""
    v = np.array(v0, dtype=float)
    stop = max(tol, _roundoff_floor(target))
    steps = np.vstack([np.zeros(3), np.eye(3) * JACOBIAN_STEP, -np.eye(3) * JACOBIAN_STEP])
    miss_vec = None
    for it in range(max_iter + 1):
        ends = _endpoints(start, v + steps, settings)
        miss_vec = ends[0] - target
        miss = float(np.linalg.norm(miss_vec))
        if miss <= stop or it == max_iter:
            return v, miss, it
        jac = (ends[1:4] - ends[4:7]).T / (2.0 * JACOBIAN_STEP)
        try:
            dv = np.linalg.solve(jac, -miss_vec)
        except np.linalg.LinAlgError:
            dv = np.linalg.lstsq(jac, -miss_vec, rcond=None)[0]
        lam = 1.0
        for _ in range(30):
            cand = v + lam * dv
            cand_miss = float(np.linalg.norm(_endpoints(start, cand[None, :], settings)[0] - target))
            if cand_miss < miss:
                break
            lam *= 0.5
        else:
            return v, miss, it
        v = cand
    return v, miss, max_iter


def _perturbed_chords(chord: np.ndarray, count: int) -> list[np.ndarray]:
    rng = np.random.default_rng(20240601)
    scale = max(1.0, float(np.linalg.norm(chord)))
    return [chord * rng.uniform(0.5, 1.5) + 0.25 * scale * rng.standard_normal(3) for _ in range(count)]


def shoot(
    start,
    target,
    tol: float = 1e-8,
    max_iter: int = MAX_NEWTON,
    restarts: int = RESTARTS,
    settings: OdeSettings = SHOOT_SETTINGS,
    path_settings: OdeSettings | None = None,
) -> ShootResult:
    """Find the initial velocity of a geodesic from ``start`` reaching ``target`` at t = 1.

    Newton starts from the chord ``target - start``; if that fails, up to
    ``restarts`` perturbed chords are tried and the smallest miss wins.
    Iteration also stops once the miss is down to roundoff, so a tolerance
    below that floor ends quickly with ``converged`` False.
    Global minimality of the returned geodesic is not certified.
    """
    start = monge.as_point(start)
    target = monge.as_point(target)
    if np.array_equal(start, target):
        raise ValueError("start and target coincide")
    chord = target - start

    best = _newton(start, target, chord, tol, max_iter, settings)
    used = 0
    if best[1] > max(tol, _roundoff_floor(target)):
        for guess in _perturbed_chords(chord, restarts):
            used += 1
            cand = _newton(start, target, guess, tol, max_iter, settings)
            if cand[1] < best[1]:
                best = cand
            if best[1] <= tol:
                break

    v, miss, iters = best
    path = integrate_geodesic(GeodesicState(start, v), 1.0, path_settings or settings)
    return ShootResult(v, miss, iters, miss <= tol, path, used)


def shoot_or_raise(start, target, tol: float = 1e-8, **kw) -> ShootResult:
    res = shoot(start, target, tol, **kw)
    if not res.converged:
        raise NoConvergence(f"shooting missed the target by {res.miss:.3g} (tol {tol:.3g})")
    return res
