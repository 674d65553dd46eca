"""Piecewise-linear probability densities over a triangulated convex domain.

All integrals are exact: the mass of a convex polygon is obtained by clipping
against each mesh triangle and integrating the linear interpolant
(centroid rule), the transport-cost integrand is cubic per triangle and uses
a degree-3 quadrature, and segment integrals reduce to trapezoids between
triangle-boundary crossings.
"""

import logging

import numpy as np

from ._backend import kernels
from .exceptions import SegmentOutsideDomain
from .geometry import ConvexPolygon

log = logging.getLogger("sdot")

__all__ = ["TriDensity", "mass", "cost_integral", "line_integral"]

REL_EPS_AREA = 1e-9
REL_EPS_ON = 1e-12
REL_EPS_COVER = 1e-9


class TriDensity:
    """Nonnegative piecewise-linear density on a triangulation of a convex hull.

    Loaded densities are normalized to unit total mass (with a warning when a
    correction was needed); constant densities are the equal-vertex-value
    special case.  Instances are immutable and all integral routines are pure.
    """

    __slots__ = (
        "vertices",
        "triangles",
        "values",
        "hull",
        "scale",
        "tri_hp",
        "tri_plane",
        "tri_areas",
        "tri_mass",
        "tri_vmax",
    )

    def __init__(self, vertices, triangles, values, hull=None):
        verts = np.ascontiguousarray(vertices, dtype=np.float64)
        tris = np.ascontiguousarray(triangles, dtype=np.int64)
        vals = np.ascontiguousarray(values, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValueError("vertices must have shape (V, 2)")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError("triangles must have shape (T, 3)")
        if vals.shape != (verts.shape[0],):
            raise ValueError("values must have one entry per vertex")
        if not (np.all(np.isfinite(verts)) and np.all(np.isfinite(vals))):
            raise ValueError("vertices and values must be finite")
        if tris.min(initial=0) < 0 or tris.max(initial=-1) >= verts.shape[0]:
            raise ValueError("triangle indices out of range")
        if np.any(vals < 0.0):
            raise ValueError("density values must be nonnegative")

        if hull is None:
            hull = _hull_of(verts)
        self.hull = hull
        self.scale = hull.diameter

        # Orient all triangles counter-clockwise.
        p0 = verts[tris[:, 0]]
        p1 = verts[tris[:, 1]]
        p2 = verts[tris[:, 2]]
        area2 = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (
            p1[:, 1] - p0[:, 1]
        )
        flip = area2 < 0.0
        if np.any(flip):
            tris = tris.copy()
            tris[flip, 1], tris[flip, 2] = tris[flip, 2], tris[flip, 1]
            area2 = np.abs(area2)
        areas = 0.5 * area2
        if np.any(areas <= 0.0):
            raise ValueError("degenerate (zero-area) triangle in mesh")
        if abs(areas.sum() - hull.area) > REL_EPS_AREA * hull.area:
            raise ValueError(
                f"triangles do not tile the hull (area {areas.sum()!r} vs {hull.area!r})"
            )

        total = float(np.sum(areas * vals[tris].mean(axis=1)))
        if total <= 0.0:
            raise ValueError("density integrates to zero")
        if abs(total - 1.0) > REL_EPS_AREA:
            log.warning("normalizing density: raw integral was %.12g", total)
        vals = vals / total

        self.vertices = _freeze(verts)
        self.triangles = _freeze_i(tris)
        self.values = _freeze(vals)
        self.tri_areas = _freeze(areas)

        corner_vals = vals[tris]
        self.tri_mass = _freeze(areas * corner_vals.mean(axis=1))
        self.tri_vmax = _freeze(corner_vals.max(axis=1))

        # Linear interpolant rho = a*x + b*y + c per triangle.
        p = verts[tris]  # (T, 3, 2)
        A = np.concatenate([p, np.ones((tris.shape[0], 3, 1))], axis=2)
        self.tri_plane = _freeze(np.linalg.solve(A, corner_vals[..., None])[..., 0])

        # Unit-normal half-plane form of each triangle edge (inside: a*x+b*y <= c).
        hp = np.empty((tris.shape[0], 3, 3))
        for e in range(3):
            s = p[:, e, :]
            t = p[:, (e + 1) % 3, :]
            a = t[:, 1] - s[:, 1]
            b = -(t[:, 0] - s[:, 0])
            norm = np.hypot(a, b)
            hp[:, e, 0] = a / norm
            hp[:, e, 1] = b / norm
            hp[:, e, 2] = (a * s[:, 0] + b * s[:, 1]) / norm
        self.tri_hp = _freeze(hp)

    @classmethod
    def uniform(cls, hull: ConvexPolygon) -> "TriDensity":
        """Constant density on a convex polygon (fan triangulation)."""
        v = hull.vertices
        n = v.shape[0]
        tris = [(0, k, k + 1) for k in range(1, n - 1)]
        return cls(v, np.array(tris), np.ones(n), hull=hull)

    def evaluate(self, points) -> np.ndarray:
        """Density values at arbitrary points (zero outside the mesh)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.zeros(pts.shape[0])
        todo = np.ones(pts.shape[0], dtype=bool)
        tol = REL_EPS_ON * self.scale
        for t in range(self.triangles.shape[0]):
            if not todo.any():
                break
            hp = self.tri_hp[t]
            s = hp[:, 2][:, None] - hp[:, 0][:, None] * pts[:, 0] - hp[:, 1][:, None] * pts[:, 1]
            inside = np.all(s >= -tol, axis=0) & todo
            if inside.any():
                a, b, c = self.tri_plane[t]
                out[inside] = a * pts[inside, 0] + b * pts[inside, 1] + c
                todo &= ~inside
        return out

    def integral(self) -> float:
        """Total mass (1 up to roundoff after normalization)."""
        return float(self.tri_mass.sum())

    def __repr__(self) -> str:
        return (
            f"TriDensity({self.vertices.shape[0]} vertices, "
            f"{self.triangles.shape[0]} triangles)"
        )


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _freeze_i(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.flags.writeable = False
    return a


def _hull_of(verts: np.ndarray) -> ConvexPolygon:
    from scipy.spatial import ConvexHull

    h = ConvexHull(verts)
    return ConvexPolygon(verts[h.vertices])


def mass(density: TriDensity, poly: ConvexPolygon) -> float:
    """Exact integral of the density over a convex polygon.

    Area outside the mesh carries no mass, so polygons sticking out of the
    hull are integrated over their in-hull part.
    """
    if poly.is_empty:
        return 0.0
    val = kernels.poly_mass(poly.vertices, density.tri_hp, density.tri_plane)
    return max(val, 0.0)


def cost_integral(density: TriDensity, poly: ConvexPolygon, site) -> float:
    """Exact integral of |x - site|^2 * rho(x) over a convex polygon."""
    if poly.is_empty:
        return 0.0
    s = np.asarray(site, dtype=np.float64)
    val = kernels.poly_cost(poly.vertices, float(s[0]), float(s[1]), density.tri_hp, density.tri_plane)
    return max(val, 0.0)


def line_integral(density: TriDensity, segment) -> float:
    """Exact integral of the density along a segment inside the mesh.

    Raises SegmentOutsideDomain when a non-negligible part of the segment is
    not covered by mesh triangles.
    """
    p0 = np.asarray(segment[0], dtype=np.float64)
    p1 = np.asarray(segment[1], dtype=np.float64)
    seg_len = float(np.hypot(*(p1 - p0)))
    if seg_len == 0.0:
        return 0.0
    tol_on = REL_EPS_ON * density.scale
    value, covered = kernels.segment_integral(
        float(p0[0]), float(p0[1]), float(p1[0]), float(p1[1]),
        density.tri_hp, density.tri_plane, tol_on,
    )
    if covered < seg_len - REL_EPS_COVER * density.scale:
        raise SegmentOutsideDomain(
            f"segment covers only {covered!r} of length {seg_len!r} inside the mesh"
        )
    return max(value, 0.0)
