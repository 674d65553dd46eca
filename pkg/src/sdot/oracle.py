"""Independent ground-truth generators: Monte Carlo, finite differences, duality.

Nothing here is imported by the solver; these routines exist to check it.
Monte Carlo sampling is chunked over counter-derived substreams, so results
are deterministic for a given seed and independent of how chunks would be
scheduled.
"""

from dataclasses import dataclass

import numpy as np

from .density import TriDensity
from .functional import eval_phi
from .geometry import ConvexPolygon, TargetMeasure, as_potential, transport_map

__all__ = [
    "RngSpec",
    "MonteCarloMasses",
    "DualityCertificate",
    "mc_masses",
    "fd_gradient",
    "fd_jacobian",
    "duality_certificate",
]

_CHUNK = 1 << 16
_MAX_THINNING_ROUNDS = 1000


@dataclass(frozen=True)
class RngSpec:
    """Deterministic sampling spec: stream seed and number of kept samples."""

    seed: int
    sample_count: int = 1_000_000

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")


@dataclass(frozen=True)
class MonteCarloMasses:
    estimates: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    sample_count: int


def _sample_chunk(density: TriDensity, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` points distributed as the density.

    Triangles are chosen by their exact mass; within a triangle, uniform
    proposals are thinned against the linear density (rejected draws retry in
    the same triangle, preserving the per-triangle conditional law).
    """
    probs = density.tri_mass / density.tri_mass.sum()
    tri_idx = rng.choice(probs.shape[0], size=size, p=probs)
    corners = density.vertices[density.triangles[tri_idx]]  # (size, 3, 2)
    plane = density.tri_plane[tri_idx]
    vmax = density.tri_vmax[tri_idx]
    pts = np.empty((size, 2))
    pending = np.arange(size)
    for _ in range(_MAX_THINNING_ROUNDS):
        m = pending.shape[0]
        if m == 0:
            break
        u = rng.random(m)
        v = rng.random(m)
        fold = u + v > 1.0
        u[fold] = 1.0 - u[fold]
        v[fold] = 1.0 - v[fold]
        c = corners[pending]
        px = c[:, 0, 0] + u * (c[:, 1, 0] - c[:, 0, 0]) + v * (c[:, 2, 0] - c[:, 0, 0])
        py = c[:, 0, 1] + u * (c[:, 1, 1] - c[:, 0, 1]) + v * (c[:, 2, 1] - c[:, 0, 1])
        pl = plane[pending]
        rho = pl[:, 0] * px + pl[:, 1] * py + pl[:, 2]
        accept = rng.random(m) * vmax[pending] < rho
        keep = pending[accept]
        pts[keep, 0] = px[accept]
        pts[keep, 1] = py[accept]
        pending = pending[~accept]
    else:  # pragma: no cover - acceptance rate is at least 1/3 per round
        raise RuntimeError("thinning did not terminate")
    return pts


def mc_masses(
    domain: ConvexPolygon,
    density: TriDensity,
    targets: TargetMeasure,
    psi,
    rng: RngSpec,
) -> MonteCarloMasses:
    """Monte Carlo estimate of the cell masses with binomial standard errors."""
    psi = as_potential(psi, len(targets))
    n_sites = len(targets)
    counts = np.zeros(n_sites, dtype=np.int64)
    remaining = rng.sample_count
    chunk_index = 0
    while remaining > 0:
        gen = np.random.default_rng([rng.seed, chunk_index])
        pts = _sample_chunk(density, gen, _CHUNK)
        if remaining < pts.shape[0]:
            pts = pts[:remaining]
        idx = transport_map(targets, psi, pts)
        counts += np.bincount(idx, minlength=n_sites)
        remaining -= pts.shape[0]
        chunk_index += 1
    est = counts / rng.sample_count
    stderr = np.sqrt(est * (1.0 - est) / rng.sample_count)
    return MonteCarloMasses(est, stderr, counts, rng.sample_count)


def fd_gradient(phi_evaluator, psi, step: float) -> np.ndarray:
    """Central finite-difference gradient of a scalar functional."""
    psi = np.asarray(psi, dtype=np.float64)
    grad = np.zeros_like(psi)
    for i in range(psi.shape[0]):
        e = np.zeros_like(psi)
        e[i] = step
        grad[i] = (phi_evaluator(psi + e) - phi_evaluator(psi - e)) / (2.0 * step)
    return grad


def fd_jacobian(g_evaluator, psi, step: float):
    """Central finite-difference Jacobian of a vector map.

    Returns (raw, symmetrized); where the map is a gradient of a twice
    differentiable functional the two agree up to truncation error.
    """
    psi = np.asarray(psi, dtype=np.float64)
    n = psi.shape[0]
    cols = []
    for i in range(n):
        e = np.zeros_like(psi)
        e[i] = step
        cols.append((np.asarray(g_evaluator(psi + e)) - np.asarray(g_evaluator(psi - e))) / (2.0 * step))
    raw = np.column_stack(cols)
    return raw, 0.5 * (raw + raw.T)


@dataclass(frozen=True)
class DualityCertificate:
    transport_cost: float
    phi_value: float
    gap: float
    grid_mass: float


def duality_certificate(
    domain: ConvexPolygon,
    density: TriDensity,
    targets: TargetMeasure,
    psi,
    grid_resolution: int = 200,
    nu=None,
) -> DualityCertificate:
    """Weak-duality check: grid transport cost of the cell map versus the functional.

    The source is discretized on a grid of cell centers weighted by the
    density; each grid atom is sent to its power cell's site.  By weak
    duality the gap is nonnegative up to discretization error and vanishes at
    the optimum.
    """
    psi = as_potential(psi, len(targets))
    xmin, ymin, xmax, ymax = domain.bounds()
    m = int(grid_resolution)
    xs = xmin + (np.arange(m) + 0.5) * (xmax - xmin) / m
    ys = ymin + (np.arange(m) + 0.5) * (ymax - ymin) / m
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    cell_area = (xmax - xmin) * (ymax - ymin) / (m * m)

    rho = density.evaluate(pts)
    inside = _contains_many(domain, pts)
    weights = rho * inside * cell_area

    idx = transport_map(targets, psi, pts)
    diff = pts - targets.points[idx]
    cost = float(np.sum(weights * (diff * diff).sum(axis=1)))
    phi = eval_phi(domain, density, targets, psi, nu=nu)
    return DualityCertificate(cost, phi, cost - phi, float(weights.sum()))


def _contains_many(poly: ConvexPolygon, pts: np.ndarray) -> np.ndarray:
    v = poly.vertices
    w = np.roll(v, -1, axis=0)
    tol = 1e-9 * poly.diameter
    inside = np.ones(pts.shape[0], dtype=bool)
    for k in range(v.shape[0]):
        ex = w[k, 0] - v[k, 0]
        ey = w[k, 1] - v[k, 1]
        cross = ex * (pts[:, 1] - v[k, 1]) - ey * (pts[:, 0] - v[k, 0])
        inside &= cross >= -tol * np.hypot(ex, ey)
    return inside
