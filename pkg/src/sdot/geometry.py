"""Convex-polygon primitives and Laguerre (power) diagrams for quadratic cost.

The cost enters the geometry in exactly two places: the half-plane
coefficients of a cell boundary (built inside :func:`laguerre_diagram`) and
the facet-weight denominator used by the Hessian (``2 * |y - z|``, in
``functional``).  Everything else is cost-agnostic plumbing.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._backend import DOMAIN_TAG, kernels
from .exceptions import DimensionMismatch, EmptyDomain, OutsideDomain

__all__ = [
    "ConvexPolygon",
    "TargetMeasure",
    "CellEdge",
    "LaguerreDiagram",
    "laguerre_diagram",
    "locate",
    "transport_map",
    "clip_polygon",
    "as_potential",
]

# All geometric tolerances are relative to the problem scale (domain diameter).
REL_EPS_DUPLICATE = 1e-12
REL_EPS_CONVEX = 1e-12
REL_EPS_CONTAINS = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


class ConvexPolygon:
    """Convex polygon with counter-clockwise vertices; may be empty.

    Vertices are stored read-only; instances are safe to share.
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        if v.size == 0:
            self.vertices = _readonly(np.zeros((0, 2)))
            return
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must have shape (n, 2)")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        if v.shape[0] < 3:
            raise ValueError("a non-empty polygon needs at least 3 vertices")
        if _signed_area(v) < 0.0:
            v = v[::-1].copy()
        scale = _diameter(v)
        if _signed_area(v) <= 1e-15 * scale * scale:
            raise ValueError("polygon is degenerate (zero area)")
        d = v - np.roll(v, -1, axis=0)
        if np.any(np.hypot(d[:, 0], d[:, 1]) <= REL_EPS_DUPLICATE * scale):
            raise ValueError("duplicate consecutive vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(cross < -REL_EPS_CONVEX * scale * scale):
            raise ValueError("vertices are not convex in counter-clockwise order")
        self.vertices = _readonly(v)

    @classmethod
    def _wrap(cls, vertices: np.ndarray) -> "ConvexPolygon":
        """Wrap kernel output without re-validating."""
        poly = object.__new__(cls)
        poly.vertices = _readonly(vertices)
        return poly

    @classmethod
    def empty(cls) -> "ConvexPolygon":
        return cls._wrap(np.zeros((0, 2)))

    @classmethod
    def box(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "ConvexPolygon":
        return cls([(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)])

    @classmethod
    def regular(cls, n: int, radius: float, center=(0.0, 0.0)) -> "ConvexPolygon":
        """Regular n-gon, first vertex on the positive x axis."""
        th = 2.0 * np.pi * np.arange(n) / n
        pts = np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])
        return cls(pts)

    @property
    def is_empty(self) -> bool:
        return self.vertices.shape[0] == 0

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def area(self) -> float:
        if self.is_empty:
            return 0.0
        return _signed_area(self.vertices)

    @property
    def centroid(self) -> np.ndarray:
        if self.is_empty:
            raise ValueError("empty polygon has no centroid")
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cr = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        a = cr.sum() / 2.0
        cx = ((v[:, 0] + w[:, 0]) * cr).sum() / (6.0 * a)
        cy = ((v[:, 1] + w[:, 1]) * cr).sum() / (6.0 * a)
        return np.array([cx, cy])

    @property
    def diameter(self) -> float:
        """Maximum pairwise vertex distance; the problem scale."""
        if self.is_empty:
            return 0.0
        return _diameter(self.vertices)

    def bounds(self) -> tuple[float, float, float, float]:
        v = self.vertices
        return v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max()

    def contains(self, point, tol: Optional[float] = None) -> bool:
        """Point-in-polygon test; boundary points count as inside."""
        if self.is_empty:
            return False
        if tol is None:
            tol = REL_EPS_CONTAINS * self.diameter
        p = np.asarray(point, dtype=np.float64)
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = (w[:, 0] - v[:, 0]) * (p[1] - v[:, 1]) - (w[:, 1] - v[:, 1]) * (p[0] - v[:, 0])
        return bool(np.all(cross >= -tol * np.hypot(w[:, 0] - v[:, 0], w[:, 1] - v[:, 1])))

    def __repr__(self) -> str:
        if self.is_empty:
            return "ConvexPolygon(empty)"
        return f"ConvexPolygon({self.n_vertices} vertices, area={self.area:.6g})"


def _signed_area(v: np.ndarray) -> float:
    w = np.roll(v, -1, axis=0)
    return float(0.5 * np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))


def _diameter(v: np.ndarray) -> float:
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((d * d).sum(-1).max()))


class TargetMeasure:
    """Finitely supported target measure: distinct points with positive masses."""

    __slots__ = ("points", "masses")

    def __init__(self, points, masses):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        m = np.ascontiguousarray(masses, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must have shape (n, 2)")
        if m.shape != (pts.shape[0],):
            raise ValueError("masses must have one entry per point")
        if pts.shape[0] == 0:
            raise ValueError("at least one target point required")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(m))):
            raise ValueError("points and masses must be finite")
        if np.any(m <= 0.0):
            raise ValueError("masses must be strictly positive")
        if abs(m.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses must sum to 1 (got {m.sum()!r})")
        if pts.shape[0] > 1:
            # Coincident targets would zero the |y - z| Hessian denominators;
            # reject rather than guess a behavior.
            scale = float(np.hypot(*(pts.max(axis=0) - pts.min(axis=0))))
            d = pts[:, None, :] - pts[None, :, :]
            d2 = (d * d).sum(-1)
            np.fill_diagonal(d2, np.inf)
            if np.sqrt(d2.min()) <= REL_EPS_DUPLICATE * max(scale, 1e-300):
                raise ValueError("target points must be pairwise distinct")
        self.points = _readonly(pts)
        self.masses = _readonly(m)

    @classmethod
    def uniform(cls, points) -> "TargetMeasure":
        pts = np.asarray(points, dtype=np.float64)
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"TargetMeasure({len(self)} points)"


@dataclass(frozen=True)
class CellEdge:
    """Directed boundary edge of a Laguerre cell.

    ``neighbor`` is the index of the site across the edge, or None when the
    edge lies on the domain boundary.
    """

    start: np.ndarray
    end: np.ndarray
    neighbor: Optional[int]

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.end - self.start)))


class LaguerreDiagram:
    """Laguerre tessellation of a convex domain.

    ``cells[i]`` is the (possibly empty) cell of site i and ``edges[i]`` its
    boundary edges with neighbor tags.  Empty cells are kept so callers can
    detect vanishing cell masses.
    """

    __slots__ = ("domain", "cells", "edges", "_raw")

    def __init__(self, domain: ConvexPolygon, raw_cells):
        self.domain = domain
        self._raw = raw_cells
        self.cells = []
        self.edges = []
        for verts, tags in raw_cells:
            if verts.shape[0] == 0:
                self.cells.append(ConvexPolygon.empty())
                self.edges.append([])
                continue
            self.cells.append(ConvexPolygon._wrap(verts))
            nv = verts.shape[0]
            cell_edges = []
            for k in range(nv):
                k1 = (k + 1) % nv
                tag = int(tags[k])
                cell_edges.append(
                    CellEdge(verts[k], verts[k1], None if tag == DOMAIN_TAG else tag)
                )
            self.edges.append(cell_edges)

    def __len__(self) -> int:
        return len(self.cells)

    def areas(self) -> np.ndarray:
        return np.array([c.area for c in self.cells])


def as_potential(psi, n: int) -> np.ndarray:
    """Validate a price vector: finite entries, one per target site."""
    p = np.ascontiguousarray(psi, dtype=np.float64)
    if p.shape != (n,):
        raise DimensionMismatch(f"potential has length {p.shape}, expected ({n},)")
    if not np.all(np.isfinite(p)):
        raise ValueError("potential entries must be finite")
    return p


def _site_order(sites: np.ndarray):
    """Per-site competitor order by increasing distance (stable on ties)."""
    n = sites.shape[0]
    d = sites[:, None, :] - sites[None, :, :]
    d2 = (d * d).sum(-1)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")[:, : n - 1]
    return np.ascontiguousarray(order, dtype=np.int64)


def _suffix_min(psi: np.ndarray, order: np.ndarray) -> np.ndarray:
    if order.shape[1] == 0:
        return np.zeros_like(order, dtype=np.float64)
    sorted_psi = psi[order]
    return np.ascontiguousarray(np.minimum.accumulate(sorted_psi[:, ::-1], axis=1)[:, ::-1])


def laguerre_diagram(
    domain: ConvexPolygon,
    targets: TargetMeasure,
    psi,
    *,
    site_order: Optional[np.ndarray] = None,
) -> LaguerreDiagram:
    """Laguerre tessellation of ``domain`` for quadratic cost.

    Cell i is the set of points x with |x - y_i|^2 + psi_i <= |x - y_j|^2 +
    psi_j for all j, realized by clipping the domain against the half-planes
    2 <x, y_j - y_i> <= |y_j|^2 - |y_i|^2 + psi_j - psi_i.  ``site_order`` can
    carry a precomputed competitor ordering (it depends only on the sites, so
    solvers reuse it across iterations).
    """
    if domain.is_empty or domain.area <= 0.0:
        raise EmptyDomain("domain polygon is empty or degenerate")
    n = len(targets)
    psi = as_potential(psi, n)
    scale = domain.diameter
    eps_dup = REL_EPS_DUPLICATE * scale
    if site_order is None:
        site_order = _site_order(targets.points)
    suffix = _suffix_min(psi, site_order)
    raw = kernels.laguerre_cells(
        domain.vertices, targets.points, psi, site_order, suffix, eps_dup
    )
    return LaguerreDiagram(domain, raw)


def locate(domain: ConvexPolygon, targets: TargetMeasure, psi, point) -> int:
    """Index of the site whose cell contains ``point`` (lowest index on ties)."""
    psi = as_potential(psi, len(targets))
    p = np.asarray(point, dtype=np.float64)
    if not domain.contains(p):
        raise OutsideDomain(f"point {p.tolist()} is outside the domain")
    d = targets.points - p
    power = (d * d).sum(-1) + psi
    return int(np.argmin(power))


def transport_map(targets: TargetMeasure, psi, points) -> np.ndarray:
    """Vectorized power-cell assignment of many points (no domain check).

    Same arithmetic and tie rule as :func:`locate`, evaluated site by site so
    memory stays linear in the number of points.
    """
    psi = as_potential(psi, len(targets))
    pts = np.asarray(points, dtype=np.float64)
    n = len(targets)
    best = np.full(pts.shape[0], np.inf)
    idx = np.zeros(pts.shape[0], dtype=np.int64)
    for i in range(n):
        dx = pts[:, 0] - targets.points[i, 0]
        dy = pts[:, 1] - targets.points[i, 1]
        power = dx * dx + dy * dy + psi[i]
        better = power < best
        best[better] = power[better]
        idx[better] = i
    return idx


def clip_polygon(subject: ConvexPolygon, halfplane) -> ConvexPolygon:
    """Clip a convex polygon by a half-plane ``{x : <normal, x> <= offset}``.

    The empty polygon is a valid result.  Intersection vertices land on the
    half-plane boundary up to roundoff.
    """
    normal, offset = halfplane
    if subject.is_empty:
        return ConvexPolygon.empty()
    eps_dup = REL_EPS_DUPLICATE * subject.diameter
    tags = np.zeros(subject.n_vertices, dtype=np.int64)
    verts, _ = kernels.clip_cell_halfplane(
        subject.vertices, tags, float(normal[0]), float(normal[1]), float(offset), 0, eps_dup
    )
    if verts.shape[0] < 3:
        return ConvexPolygon.empty()
    return ConvexPolygon._wrap(verts)
