"""Runtime verifiers for the concavity theory and convergence rates.

The negated Hessian is the Laplacian of a weighted graph; these helpers
extract that graph, compute its Cheeger constant by exact subset enumeration
(small graphs only), check the Cheeger eigenvalue bound, analyze solver
convergence rates, and generate a radial test density whose support is an
annulus.
"""

import math
from dataclasses import dataclass

import numpy as np

from .density import TriDensity
from .exceptions import InvalidProfile, TooLarge, TooShort
from .functional import HessianMatrix
from .geometry import ConvexPolygon

__all__ = [
    "WeightedGraph",
    "CheegerReport",
    "RateReport",
    "graph_from_hessian",
    "cheeger_constant",
    "verify_cheeger_inequality",
    "annulus_density",
    "tent_profile",
    "rate_analysis",
]

MAX_EXACT_NODES = 20


class WeightedGraph:
    """Undirected weighted graph given by a symmetric adjacency matrix."""

    __slots__ = ("weights",)

    def __init__(self, weights):
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weight matrix must be square")
        wmax = max(1.0, float(np.abs(w).max(initial=0.0)))
        if np.abs(w - w.T).max(initial=0.0) > 1e-12 * wmax:
            raise ValueError("weight matrix must be symmetric")
        if np.any(np.diagonal(w) != 0.0):
            raise ValueError("weight matrix must have zero diagonal")
        if w.min(initial=0.0) < 0.0:
            raise ValueError("weights must be nonnegative")
        w.flags.writeable = False
        self.weights = w

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def laplacian(self) -> np.ndarray:
        return np.diag(self.degrees()) - self.weights

    def is_connected(self) -> bool:
        n = self.n
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = [0]
        adj = self.weights > 0.0
        while frontier:
            nxt = adj[frontier].any(axis=0) & ~seen
            frontier = np.flatnonzero(nxt).tolist()
            seen |= nxt
        return bool(seen.all())


def graph_from_hessian(hessian: HessianMatrix) -> WeightedGraph:
    """Weighted graph whose Laplacian is the negated Hessian."""
    w = hessian.weights()
    # Facet weights are nonnegative by construction; clip roundoff noise.
    np.clip(w, 0.0, None, out=w)
    return WeightedGraph(w)


def cheeger_constant(graph: WeightedGraph) -> float:
    """Exact Cheeger constant: minimum cut weight over smaller degree mass.

    Enumerates every one of the 2^(n-1) - 1 nontrivial cuts, so graphs are
    capped at 20 nodes.  Disconnected graphs return 0.
    """
    n = graph.n
    if n > MAX_EXACT_NODES:
        raise TooLarge(f"exact enumeration capped at {MAX_EXACT_NODES} nodes (got {n})")
    if n < 2:
        raise ValueError("need at least 2 nodes")
    w = graph.weights
    deg = graph.degrees()
    total = float(deg.sum())
    if total <= 0.0:
        raise ValueError("graph has no edges")
    if not graph.is_connected():
        return 0.0

    best = math.inf
    n_masks = 1 << (n - 1)
    chunk = 1 << 16
    bit_cols = np.arange(n - 1, dtype=np.int64)
    for start in range(0, n_masks - 1, chunk):
        masks = np.arange(start, min(start + chunk, n_masks - 1), dtype=np.int64)
        # Subsets always contain node 0, so each unordered cut appears once.
        s = np.ones((masks.shape[0], n))
        s[:, 1:] = (masks[:, None] >> bit_cols) & 1
        mass_s = s @ deg
        internal = np.einsum("ij,ij->i", s @ w, s)
        cut = mass_s - internal
        denom = np.minimum(mass_s, total - mass_s)
        best = min(best, float((cut / denom).min()))
    return best


@dataclass(frozen=True)
class CheegerReport:
    lambda2: float
    cheeger: float
    min_degree: float
    bound: float
    holds: bool


def verify_cheeger_inequality(graph: WeightedGraph) -> CheegerReport:
    """Check lambda_2(L) >= 0.5 * h^2 * min degree on a weighted graph."""
    h = cheeger_constant(graph)
    eigs = np.linalg.eigvalsh(graph.laplacian())
    lam2 = float(eigs[1])
    min_deg = float(graph.degrees().min())
    bound = 0.5 * h * h * min_deg
    return CheegerReport(
        lambda2=lam2,
        cheeger=h,
        min_degree=min_deg,
        bound=bound,
        holds=lam2 >= bound - 1e-10,
    )


def tent_profile(r: float, R: float):
    """Concave radial profile: zero on [0, r], triangular peak on [r, R], unit integral."""
    peak = 2.0 / (R - r)
    mid = 0.5 * (r + R)

    def profile(s):
        s = np.asarray(s, dtype=np.float64)
        up = (s - r) / (mid - r)
        down = (R - s) / (R - mid)
        return peak * np.clip(np.minimum(up, down), 0.0, None)

    return profile


def annulus_density(
    r: float,
    R: float,
    profile="tent",
    mesh_resolution: int = 64,
) -> TriDensity:
    """Radial density rho(x) = profile(|x|) / (2 pi |x|) on a disc of radius R.

    The profile must vanish on [0, r] and be concave on [r, R]; the support
    of the result is then the annulus r <= |x| <= R (not simply connected).
    The returned mesh density is renormalized after sampling at the vertices.
    """
    if not (0.0 < r < R):
        raise ValueError("need 0 < r < R")
    if mesh_resolution < 8:
        raise ValueError("mesh_resolution must be at least 8")
    if profile == "tent":
        profile = tent_profile(r, R)

    # Shape checks on a sample grid: zero inside, concave on the annulus.
    s_in = np.linspace(0.0, r, 65)
    if np.any(np.abs(profile(s_in)) > 1e-12):
        raise InvalidProfile("profile must vanish on [0, r]")
    s_an = np.linspace(r, R, 129)
    vals = profile(s_an)
    if np.any(vals < -1e-12):
        raise InvalidProfile("profile must be nonnegative")
    second = vals[2:] - 2.0 * vals[1:-1] + vals[:-2]
    if np.any(second > 1e-9):
        raise InvalidProfile("profile must be concave on [r, R]")

    n_theta = int(mesh_resolution)
    n_rings = max(3, n_theta // 4)
    radii = np.concatenate([[r], np.linspace(r, R, n_rings)[1:]])
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta

    verts = [np.zeros(2)]
    values = [0.0]
    for rad in radii:
        ring = np.column_stack([rad * np.cos(theta), rad * np.sin(theta)])
        verts.extend(ring)
        rho = profile(rad) / (2.0 * np.pi * rad)
        values.extend([float(rho)] * n_theta)
    verts = np.asarray(verts)
    values = np.asarray(values)

    def ring_index(k, m):
        return 1 + k * n_theta + (m % n_theta)

    tris = []
    for m in range(n_theta):
        tris.append((0, ring_index(0, m), ring_index(0, m + 1)))
    for k in range(len(radii) - 1):
        for m in range(n_theta):
            a0 = ring_index(k, m)
            a1 = ring_index(k, m + 1)
            b0 = ring_index(k + 1, m)
            b1 = ring_index(k + 1, m + 1)
            tris.append((a0, b0, b1))
            tris.append((a0, b1, a1))
    hull = ConvexPolygon(verts[1 + (len(radii) - 1) * n_theta :])
    return TriDensity(verts, np.asarray(tris), values, hull=hull)


@dataclass(frozen=True)
class RateReport:
    per_step_ratios: np.ndarray
    linear_phase_ratio: float
    quadratic_phase_detected: bool


def rate_analysis(report) -> RateReport:
    """Convergence-rate summary of a solve trace.

    The linear ratio is the geometric mean of per-step residual ratios.  A
    quadratic tail is flagged when the trailing run of full Newton steps
    (exponent 0) spans at least two steps and the last two log2-residual
    gaps at least double.
    """
    records = report.iterations
    if len(records) < 3:
        raise TooShort("rate analysis needs at least 3 iterations")
    res = np.array([rec.residual_l2 for rec in records])
    ratios = res[1:] / res[:-1]
    linear = float(np.exp(np.mean(np.log(ratios))))

    exps = [rec.step_exponent for rec in records[1:]]
    trailing_full = 0
    for e in reversed(exps):
        if e == 0:
            trailing_full += 1
        else:
            break
    quadratic = False
    if trailing_full >= 2:
        logs = np.log2(res[-3:])
        g1 = logs[0] - logs[1]
        g2 = logs[1] - logs[2]
        quadratic = bool(g2 >= 2.0 * g1 - 1e-9)
    return RateReport(ratios, linear, quadratic)
