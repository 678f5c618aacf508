"""Numerical exploration of isoenergy surfaces Q^3_{a,b,h}.

Seeds are drawn exactly on M^4_{a,b} and pushed onto {H = h} by Newton
projection. For kappa > 0, u = x + sqrt(kappa) J and v = x - sqrt(kappa) J
satisfy |u|^2 = a + 2 sqrt(kappa) b and |v|^2 = a - 2 sqrt(kappa) b, so
M^4 is a product of two round spheres in these coordinates.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.cluster.hierarchy import DisjointSet
from scipy.optimize import least_squares
from scipy.spatial import cKDTree

from .system import (
    OrbitParams, constraint_jacobian, constraint_residuals, evaluate, first_integral,
    gradient, hamiltonian, integrals, is_regular_orbit, momentum_jacobian, project_batch,
)


class EmptyLevelSet(ValueError):
    pass


@dataclass
class ScanConfig:
    samples: int = 20000
    seed: int = 20180611
    tol: float = 1e-10
    max_iter: int = 50
    oversample: int = 20
    radius_factor: float = 3.0
    svd_tol: float = 1e-6
    batch_size: int = 5000
    workers: int = 1
    candidate_fraction: float = 0.01


@dataclass
class SampleCloud:
    points: np.ndarray  # (n, 6) phase coordinates (J, x)
    params: OrbitParams
    seed: int
    tol: float

    def __len__(self):
        return len(self.points)

    def residuals(self) -> np.ndarray:
        return constraint_residuals(self.points, self.params)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.points, delimiter=",", header="J1,J2,J3,x1,x2,x3", comments="")


def _sphere(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return radius * v / np.linalg.norm(v, axis=1, keepdims=True)


def seed_points(p: OrbitParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random points on M^4_{a,b} (exactly on it for kappa > 0)."""
    if p.kappa > 0:
        s = math.sqrt(p.kappa)
        ru2, rv2 = p.a + 2 * s * p.b, p.a - 2 * s * p.b
        u = _sphere(rng, n, math.sqrt(ru2))
        v = _sphere(rng, n, math.sqrt(max(rv2, 0.0)))
        x = (u + v) / 2
        J = (u - v) / (2 * s)
        return np.hstack([J, x])
    # no compact model: Gaussian seeds at the scale of the orbit, Newton does the rest
    scale = math.sqrt(max(abs(p.a), abs(p.b), 1.0))
    return rng.normal(scale=scale, size=(n, 6))


def _batch(p: OrbitParams, n: int, seed_seq, tol: float, max_iter: int, oversample: int):
    rng = np.random.default_rng(seed_seq)
    cand = seed_points(p, n * oversample, rng)
    gap = np.abs(evaluate(hamiltonian(), cand, p.kappa, p.c1) - p.h)
    shell = cand[np.sort(np.argpartition(gap, n - 1)[:n])] if n < len(cand) else cand
    z, ok = project_batch(shell, p, tol=tol, max_iter=max_iter)
    return z[ok]


def sample_isoenergy(
    p: OrbitParams,
    n: int = 20000,
    seed: int = ScanConfig.seed,
    tol: float = 1e-10,
    max_iter: int = 50,
    batch_size: int = 5000,
    workers: int = 1,
    oversample: int = 20,
) -> SampleCloud:
    """Up to ``n`` points of Q^3, deterministic in ``seed``.

    Each batch draws ``oversample`` times more points of M^4 than it keeps,
    keeps those with H closest to h (a thin shell around Q^3, whose density
    on Q^3 is proportional to 1/|grad H|) and projects them. Batches use
    independent child seeds and are concatenated in batch order, so the
    result does not depend on ``workers``.
    """
    if not is_regular_orbit(p):
        raise ValueError(f"orbit (kappa={p.kappa}, a={p.a}, b={p.b}) is not regular")
    if n <= 0:
        raise ValueError("n must be positive")
    sizes = [min(batch_size, n - k) for k in range(0, n, batch_size)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    args = [(p, s, c, tol, max_iter, oversample) for s, c in zip(sizes, children)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _batch(*a), args))
    else:
        parts = [_batch(*a) for a in args]
    pts = np.concatenate(parts) if parts else np.empty((0, 6))
    if len(pts) == 0:
        raise EmptyLevelSet(f"no seed reached H = {p.h} on M^4(a={p.a}, b={p.b}, kappa={p.kappa})")
    return SampleCloud(pts, p, seed, tol)


def median_nn_distance(points: np.ndarray) -> float:
    dist, _ = cKDTree(points).query(points, k=2)
    return float(np.median(dist[:, 1]))


def component_labels(points: np.ndarray, radius: float) -> np.ndarray:
    if radius <= 0:
        raise ValueError("radius must be positive")
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    ds = DisjointSet(range(len(points)))
    for i, j in pairs:
        ds.merge(int(i), int(j))
    roots = {}
    return np.array([roots.setdefault(ds[i], len(roots)) for i in range(len(points))])


def component_count(cloud, radius: float | None = None, radius_factor: float = 3.0) -> int:
    """Connected components of the ``radius``-neighbourhood graph of the cloud."""
    points = cloud.points if isinstance(cloud, SampleCloud) else np.asarray(cloud)
    if len(points) == 0:
        return 0
    if radius is None:
        radius = radius_factor * median_nn_distance(points)
    return int(component_labels(points, radius).max() + 1)


# --- critical values of K ------------------------------------------------

def smallest_singular_value(z: np.ndarray, p: OrbitParams) -> np.ndarray:
    return np.linalg.svd(momentum_jacobian(np.atleast_2d(z), p), compute_uv=False)[:, -1]


def _critical_residual(w: np.ndarray, p: OrbitParams) -> np.ndarray:
    z, lam = w[:6], w[6:]
    gk = gradient(first_integral(), z, p.kappa, p.c1)
    jac = constraint_jacobian(z, p)
    return np.concatenate([gk - lam @ jac, constraint_residuals(z, p)])


def refine_critical(z0: np.ndarray, p: OrbitParams, tol: float = 1e-13) -> np.ndarray:
    """Drive a point of Q^3 onto the set where dK is dependent on d(f1, f2, H)."""
    jac = constraint_jacobian(z0, p)
    gk = gradient(first_integral(), z0, p.kappa, p.c1)
    lam0 = np.linalg.lstsq(jac.T, gk, rcond=None)[0]
    sol = least_squares(_critical_residual, np.concatenate([z0, lam0]), args=(p,),
                        method="lm", xtol=tol, ftol=tol, gtol=tol, max_nfev=2000)
    return sol.x[:6]


def cluster_values(values, width: float) -> list:
    values = sorted(values)
    out, group = [], []
    for v in values:
        if group and v - group[-1] > width:
            out.append(float(np.mean(group)))
            group = []
        group.append(v)
    if group:
        out.append(float(np.mean(group)))
    return out


def critical_values_K(
    p: OrbitParams,
    n: int = 4000,
    seed: int = ScanConfig.seed,
    svd_tol: float = 1e-6,
    candidate_fraction: float = 0.01,
    cluster_width: float = 1e-5,
    cloud: SampleCloud | None = None,
) -> list:
    """Clustered K values at rank-3 points of (f1, f2, H, K) on Q^3.

    Candidates are the sampled points with the smallest singular values of
    the 4x6 Jacobian plus the K-extremal samples; each is refined by
    least squares on the Lagrange system and kept only if the refined point
    is on Q^3 and its smallest singular value is below ``svd_tol``.
    """
    if not is_regular_orbit(p):
        raise ValueError("orbit is not regular")
    cloud = cloud if cloud is not None else sample_isoenergy(p, n, seed)
    z = cloud.points
    sig = smallest_singular_value(z, p)
    kvals = integrals(z, p.kappa, p.c1)[:, 3]
    m = max(8, int(candidate_fraction * len(z)))
    idx = set(np.argsort(sig)[:m].tolist())
    idx |= set(np.argsort(kvals)[:4].tolist()) | set(np.argsort(kvals)[-4:].tolist())
    found = []
    for i in sorted(idx):
        zc = refine_critical(z[i], p)
        if np.abs(constraint_residuals(zc, p)).max() > 1e-8:
            continue
        if smallest_singular_value(zc, p)[0] < svd_tol:
            found.append(float(integrals(zc, p.kappa, p.c1)[3]))
    return cluster_values(found, cluster_width)


# --- scans ---------------------------------------------------------------

def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:steps`` -> strictly increasing grid (a single value is allowed)."""
    parts = text.split(":")
    if len(parts) == 1:
        return np.array([float(parts[0])])
    lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    if steps < 1 or (steps > 1 and hi <= lo):
        raise ValueError(f"bad grid {text!r}")
    return np.linspace(lo, hi, steps)


@dataclass
class ScanRow:
    h: float
    status: str  # "ok" | "EmptyLevelSet" | "singular-orbit"
    samples: int = 0
    components: int | None = None
    critical_K: list = field(default_factory=list)
    max_residual: float | None = None


@dataclass
class ScanReport:
    kappa: float
    a: float
    b: float
    c1: float
    seed: int
    samples: int
    rows: list
    changes: list  # indices i where rows[i] and rows[i+1] differ in component count
    diagnostics: list = field(default_factory=list)

    def to_json(self) -> dict:
        out = asdict(self)
        out["schema"] = 1
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> "ScanReport":
        data = dict(data)
        if data.pop("schema", None) != 1:
            raise ValueError("unsupported scan report schema")
        data["rows"] = [ScanRow(**r) for r in data["rows"]]
        return cls(**data)


def scan_h(
    kappa: float,
    a: float,
    b: float,
    h_grid,
    n: int = 20000,
    seed: int = ScanConfig.seed,
    c1: float = 1.0,
    critical: bool = False,
    config: ScanConfig | None = None,
    on_cloud=None,
) -> ScanReport:
    """Sample Q^3 at each h of the grid and count components.

    ``on_cloud(index, cloud)`` is called for every sampled level, e.g. to
    dump the points.
    """
    cfg = config or ScanConfig()
    grid = np.asarray(h_grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("h grid must be nonempty and strictly increasing")
    rows, diags = [], []
    for h in grid:
        p = OrbitParams(kappa, a, b, float(h), c1)
        if not is_regular_orbit(p):
            rows.append(ScanRow(float(h), "singular-orbit"))
            continue
        try:
            cloud = sample_isoenergy(p, n, seed, cfg.tol, cfg.max_iter, cfg.batch_size, cfg.workers, cfg.oversample)
        except EmptyLevelSet:
            rows.append(ScanRow(float(h), "EmptyLevelSet"))
            continue
        row = ScanRow(
            float(h), "ok", len(cloud),
            component_count(cloud, radius_factor=cfg.radius_factor),
            max_residual=float(np.abs(cloud.residuals()).max()),
        )
        if on_cloud is not None:
            on_cloud(len(rows), cloud)
        if critical:
            row.critical_K = critical_values_K(p, svd_tol=cfg.svd_tol, cloud=cloud,
                                               candidate_fraction=cfg.candidate_fraction)
        if len(cloud) < n:
            diags.append(f"h={h:.6g}: {n - len(cloud)} seeds rejected")
        rows.append(row)
    changes = [i for i in range(len(rows) - 1) if rows[i].components != rows[i + 1].components]
    return ScanReport(kappa, a, b, c1, seed, n, rows, changes, diags)
