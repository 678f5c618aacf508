"""Kovalevskaya-type top on the so(4) - e(3) - so(3,1) pencil.

Symbolic objects (Casimirs, H, K) live in :mod:`kovtop.algebra` and are
never specialised; numeric helpers take ``kappa`` and ``c1`` explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .algebra import (
    C1_VAR, COORDS, KAPPA_VAR, PHASE, Poly, X1, X2, X3, J1, J2, J3,
    poisson_bracket,
)


class NoConvergence(RuntimeError):
    """Newton projection failed: rank-deficient Jacobian or too many iterations."""


@dataclass(frozen=True)
class PhasePoint:
    J: tuple
    x: tuple
    kappa: float

    def __post_init__(self):
        J = tuple(float(v) for v in self.J)
        x = tuple(float(v) for v in self.x)
        if len(J) != 3 or len(x) != 3:
            raise ValueError("J and x must be 3-vectors")
        if not all(math.isfinite(v) for v in J + x + (float(self.kappa),)):
            raise ValueError("non-finite phase point")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "kappa", float(self.kappa))

    @classmethod
    def from_array(cls, z, kappa: float) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        return cls(tuple(z[:3]), tuple(z[3:6]), kappa)

    def as_array(self) -> np.ndarray:
        return np.array(self.J + self.x)


@dataclass(frozen=True)
class OrbitParams:
    kappa: float
    a: float
    b: float
    h: float = 0.0
    c1: float = 1.0

    def with_h(self, h: float) -> "OrbitParams":
        return OrbitParams(self.kappa, self.a, self.b, h, self.c1)


# --- symbolic ----------------------------------------------------------

@lru_cache(maxsize=None)
def casimirs() -> tuple:
    f1 = X1 ** 2 + X2 ** 2 + X3 ** 2 + KAPPA_VAR * (J1 ** 2 + J2 ** 2 + J3 ** 2)
    f2 = X1 * J1 + X2 * J2 + X3 * J3
    return f1, f2


@lru_cache(maxsize=None)
def hamiltonian() -> Poly:
    return J1 ** 2 + J2 ** 2 + J3.scale(2) * J3 + (C1_VAR * X1).scale(2)


@lru_cache(maxsize=None)
def first_integral() -> Poly:
    u = J1 ** 2 - J2 ** 2 - (C1_VAR * X1).scale(2) + KAPPA_VAR * C1_VAR ** 2
    v = (J1 * J2).scale(2) - (C1_VAR * X2).scale(2)
    return u ** 2 + v ** 2


def is_regular_orbit(p: OrbitParams) -> bool:
    """Whether M^4_{a,b} = {f1 = a, f2 = b} is a regular nonempty 4-manifold.

    For kappa > 0 the Casimir differentials are dependent exactly where
    x = +-sqrt(kappa) J, i.e. on a = 2 sqrt(kappa) |b|; below that the level
    set is empty.
    """
    if p.kappa > 0:
        return p.a > 2.0 * math.sqrt(p.kappa) * abs(p.b)
    if p.kappa == 0:
        return p.a > 0
    return (p.a, p.b) != (0, 0)


# --- numeric evaluation -----------------------------------------------

def _full(z: np.ndarray, kappa: float, c1: float) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    extra = np.broadcast_to(np.array([kappa, c1]), z.shape[:-1] + (2,))
    return np.concatenate([z, extra], axis=-1)


@lru_cache(maxsize=None)
def _compiled(poly: Poly):
    return poly.lambdify()


@lru_cache(maxsize=None)
def _compiled_grad(poly: Poly):
    return tuple(poly.diff(i).lambdify() for i in PHASE)


def evaluate(poly: Poly, z, kappa: float, c1: float = 1.0):
    """Evaluate ``poly`` at phase array(s) ``z`` of shape (..., 6)."""
    return _compiled(poly)(_full(z, kappa, c1))


def gradient(poly: Poly, z, kappa: float, c1: float = 1.0) -> np.ndarray:
    full = _full(z, kappa, c1)
    return np.stack([g(full) for g in _compiled_grad(poly)], axis=-1)


def constraint_polys() -> tuple:
    f1, f2 = casimirs()
    return f1, f2, hamiltonian()


def eval_constraints(pt: PhasePoint, p: OrbitParams) -> np.ndarray:
    z = pt.as_array()
    targets = (p.a, p.b, p.h)
    return np.array([evaluate(g, z, pt.kappa, p.c1) - t for g, t in zip(constraint_polys(), targets)])


def constraint_residuals(z: np.ndarray, p: OrbitParams) -> np.ndarray:
    """Batched residuals, shape (n, 3)."""
    return np.stack(
        [evaluate(g, z, p.kappa, p.c1) - t for g, t in zip(constraint_polys(), (p.a, p.b, p.h))],
        axis=-1,
    )


def constraint_jacobian(z: np.ndarray, p: OrbitParams) -> np.ndarray:
    """Batched 3x6 Jacobian of (f1, f2, H)."""
    return np.stack([gradient(g, z, p.kappa, p.c1) for g in constraint_polys()], axis=-2)


@lru_cache(maxsize=None)
def sgrad_polys(f: Poly) -> tuple:
    """Components {z_i, f} of the Hamiltonian vector field of ``f``, exactly."""
    return tuple(poisson_bracket(z, f) for z in COORDS)


def sgrad(f: Poly, c1: float = 1.0):
    """Numeric evaluator ``pt -> 6-vector`` of the vector field {z_i, f}.

    Accepts a :class:`PhasePoint`, or a phase array together with ``kappa``.
    """
    comps = [c.lambdify() for c in sgrad_polys(f)]

    def field(pt, kappa: float | None = None):
        if isinstance(pt, PhasePoint):
            z, kappa = pt.as_array(), pt.kappa
        else:
            z = np.asarray(pt, dtype=float)
        full = _full(z, kappa, c1)
        return np.stack([c(full) for c in comps], axis=-1)

    return field


# --- projection --------------------------------------------------------

def newton_project(
    pt: PhasePoint,
    p: OrbitParams,
    tol: float = 1e-10,
    max_iter: int = 50,
    rank_tol: float = 1e-10,
) -> PhasePoint:
    """Project onto Q^3 with minimal-norm Newton steps (pseudo-inverse of the
    3x6 constraint Jacobian)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if pt.kappa != p.kappa:
        raise ValueError("kappa of point and orbit parameters differ")
    z = pt.as_array()
    for _ in range(max_iter + 1):
        r = constraint_residuals(z, p)
        if np.all(np.abs(r) <= tol):
            return PhasePoint.from_array(z, p.kappa)
        jac = constraint_jacobian(z, p)
        s = np.linalg.svd(jac, compute_uv=False)
        if s[-1] <= rank_tol * max(1.0, s[0]):
            raise NoConvergence(f"constraint Jacobian rank-deficient (sigma_min={s[-1]:.3e})")
        z = z - np.linalg.pinv(jac) @ r
    raise NoConvergence(f"no convergence in {max_iter} iterations, residual {np.abs(r).max():.3e}")


def project_batch(
    z: np.ndarray,
    p: OrbitParams,
    tol: float = 1e-10,
    max_iter: int = 50,
    rank_tol: float = 1e-8,
) -> tuple:
    """Vectorised Newton projection of many seeds.

    Returns ``(points, ok)`` where ``ok`` marks seeds that converged with a
    full-rank Jacobian at the final point.
    """
    z = np.array(z, dtype=float, copy=True)
    active = np.ones(len(z), dtype=bool)
    ok = np.zeros(len(z), dtype=bool)
    for _ in range(max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        r = constraint_residuals(z[idx], p)
        done = np.all(np.abs(r) <= tol, axis=-1)
        ok[idx[done]] = True
        active[idx[done]] = False
        idx, r = idx[~done], r[~done]
        if idx.size == 0:
            break
        jac = constraint_jacobian(z[idx], p)
        gram = jac @ np.swapaxes(jac, -1, -2)
        try:
            step = np.swapaxes(jac, -1, -2) @ np.linalg.solve(gram, r[..., None])
        except np.linalg.LinAlgError:  # some seed sits on a rank-deficient point
            step = np.linalg.pinv(jac) @ r[..., None]
        z[idx] -= step[..., 0]
        bad = ~np.all(np.isfinite(z[idx]), axis=-1) | (np.abs(z[idx]).max(axis=-1) > 1e6)
        active[idx[bad]] = False
    if ok.any():
        s = np.linalg.svd(constraint_jacobian(z[ok], p), compute_uv=False)
        good = s[:, -1] > rank_tol * np.maximum(1.0, s[:, 0])
        ok[np.flatnonzero(ok)[~good]] = False
    return z, ok


def momentum_jacobian(z: np.ndarray, p: OrbitParams) -> np.ndarray:
    """Batched 4x6 Jacobian of (f1, f2, H, K)."""
    polys = constraint_polys() + (first_integral(),)
    return np.stack([gradient(g, z, p.kappa, p.c1) for g in polys], axis=-2)


def integrals(z: np.ndarray, kappa: float, c1: float = 1.0) -> np.ndarray:
    """Values of (f1, f2, H, K), shape (..., 4)."""
    polys = constraint_polys() + (first_integral(),)
    return np.stack([evaluate(g, z, kappa, c1) for g in polys], axis=-1)
