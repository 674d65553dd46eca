"""Pure-Python geometry/integration kernels.

Fallback implementation of the hot loops: tagged half-plane clipping,
power-cell construction, and exact integrals of a piecewise-linear density
over convex polygons and segments.  ``sdot._core`` is a compiled drop-in
replacement; both backends perform the same floating-point operations in the
same order so results agree to the last bit in practice.
"""

import math

import numpy as np

BACKEND_NAME = "python"

# Edge tag used for pieces of the domain boundary (cell edges otherwise carry
# the index of the neighboring site).
DOMAIN_TAG = -1

# Degree-3 exact triangle quadrature (4 points, one negative weight).
_QW = (-27.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0)
_QP = (
    (1.0 / 3.0, 1.0 / 3.0),
    (0.6, 0.2),
    (0.2, 0.6),
    (0.2, 0.2),
)


def _clip_lists(xs, ys, tags, a, b, c, new_tag, eps_dup):
    """Clip a convex polygon (vertex/tag lists) by {a*x + b*y <= c}.

    Returns (xs, ys, tags, changed).  Tag k describes the edge from vertex k
    to vertex k+1; the edge created on the clipping line gets ``new_tag``.
    The input lists are returned untouched when no vertex is strictly
    outside, so a non-cutting half-plane is an exact no-op.
    """
    n = len(xs)
    if n == 0:
        return xs, ys, tags, False
    sides = [c - a * xs[k] - b * ys[k] for k in range(n)]
    smin = min(sides)
    if smin >= 0.0:
        return xs, ys, tags, False
    if max(sides) < 0.0:
        return [], [], [], True

    out_x, out_y, out_t = [], [], []
    for k in range(n):
        k1 = k + 1 if k + 1 < n else 0
        s0 = sides[k]
        s1 = sides[k1]
        if s0 >= 0.0:
            out_x.append(xs[k])
            out_y.append(ys[k])
            if s1 >= 0.0:
                out_t.append(tags[k])
            else:
                out_t.append(tags[k])
                t = s0 / (s0 - s1)
                out_x.append(xs[k] + t * (xs[k1] - xs[k]))
                out_y.append(ys[k] + t * (ys[k1] - ys[k]))
                out_t.append(new_tag)
        elif s1 >= 0.0:
            t = s0 / (s0 - s1)
            out_x.append(xs[k] + t * (xs[k1] - xs[k]))
            out_y.append(ys[k] + t * (ys[k1] - ys[k]))
            out_t.append(tags[k])

    # Drop degenerate edges; the merged edge keeps the surviving tag.
    m = len(out_x)
    if m >= 3:
        keep_x, keep_y, keep_t = [], [], []
        for k in range(m):
            k1 = k + 1 if k + 1 < m else 0
            dx = out_x[k1] - out_x[k]
            dy = out_y[k1] - out_y[k]
            if math.hypot(dx, dy) > eps_dup:
                keep_x.append(out_x[k])
                keep_y.append(out_y[k])
                keep_t.append(out_t[k])
        out_x, out_y, out_t = keep_x, keep_y, keep_t
    if len(out_x) < 3:
        return [], [], [], True
    return out_x, out_y, out_t, True


def clip_cell_halfplane(verts, tags, a, b, c, new_tag, eps_dup):
    """Array-in/array-out wrapper around the tagged convex clip."""
    xs = [float(v) for v in verts[:, 0]]
    ys = [float(v) for v in verts[:, 1]]
    tg = [int(t) for t in tags]
    xs, ys, tg, _ = _clip_lists(xs, ys, tg, float(a), float(b), float(c), int(new_tag), float(eps_dup))
    return _pack(xs, ys, tg)


def _pack(xs, ys, tags):
    if not xs:
        return np.zeros((0, 2)), np.zeros(0, dtype=np.int64)
    v = np.empty((len(xs), 2))
    v[:, 0] = xs
    v[:, 1] = ys
    return v, np.asarray(tags, dtype=np.int64)


def laguerre_cells(domain, sites, psi, order, suffix_min, eps_dup):
    """Build all power cells of ``sites`` with additive weights ``psi``.

    ``order[i]`` lists the other site indices sorted by distance from site i
    and ``suffix_min[i, p]`` is the minimum of ``psi`` over ``order[i, p:]``;
    both let the scan over competitors stop as soon as no remaining
    half-plane can cut the current cell.
    """
    n_sites = sites.shape[0]
    dom_x = [float(v) for v in domain[:, 0]]
    dom_y = [float(v) for v in domain[:, 1]]
    sx = [float(v) for v in sites[:, 0]]
    sy = [float(v) for v in sites[:, 1]]
    psi_l = [float(v) for v in psi]
    cells = []
    for i in range(n_sites):
        xs = list(dom_x)
        ys = list(dom_y)
        tg = [DOMAIN_TAG] * len(xs)
        xi = sx[i]
        yi = sy[i]
        pi = psi_l[i]
        norm_i = xi * xi + yi * yi
        r2max = 0.0
        for k in range(len(xs)):
            dx = xs[k] - xi
            dy = ys[k] - yi
            d2 = dx * dx + dy * dy
            if d2 > r2max:
                r2max = d2
        for p in range(n_sites - 1):
            j = int(order[i, p])
            dx = sx[j] - xi
            dy = sy[j] - yi
            d2 = dx * dx + dy * dy
            if d2 > r2max:
                margin = math.sqrt(d2) - math.sqrt(r2max)
                gap = margin * margin - r2max
                if gap >= pi - suffix_min[i, p]:
                    break
                if gap >= pi - psi_l[j]:
                    continue
            cc = (sx[j] * sx[j] + sy[j] * sy[j]) - norm_i + psi_l[j] - pi
            xs, ys, tg, changed = _clip_lists(xs, ys, tg, 2.0 * dx, 2.0 * dy, cc, j, eps_dup)
            if not xs:
                break
            if changed:
                r2max = 0.0
                for k in range(len(xs)):
                    ddx = xs[k] - xi
                    ddy = ys[k] - yi
                    d2v = ddx * ddx + ddy * ddy
                    if d2v > r2max:
                        r2max = d2v
        cells.append(_pack(xs, ys, tg))
    return cells


def _clip_plain(xs, ys, a, b, c):
    """Untagged convex clip by {a*x + b*y <= c}; returns (xs, ys)."""
    n = len(xs)
    if n == 0:
        return xs, ys
    sides = [c - a * xs[k] - b * ys[k] for k in range(n)]
    if min(sides) >= 0.0:
        return xs, ys
    if max(sides) < 0.0:
        return [], []
    out_x, out_y = [], []
    for k in range(n):
        k1 = k + 1 if k + 1 < n else 0
        s0 = sides[k]
        s1 = sides[k1]
        if s0 >= 0.0:
            out_x.append(xs[k])
            out_y.append(ys[k])
            if s1 < 0.0:
                t = s0 / (s0 - s1)
                out_x.append(xs[k] + t * (xs[k1] - xs[k]))
                out_y.append(ys[k] + t * (ys[k1] - ys[k]))
        elif s1 >= 0.0:
            t = s0 / (s0 - s1)
            out_x.append(xs[k] + t * (xs[k1] - xs[k]))
            out_y.append(ys[k] + t * (ys[k1] - ys[k]))
    return out_x, out_y


def poly_mass(verts, tri_hp, tri_plane):
    """Exact integral of the piecewise-linear density over a convex polygon."""
    n = verts.shape[0]
    if n < 3:
        return 0.0
    base_x = [float(v) for v in verts[:, 0]]
    base_y = [float(v) for v in verts[:, 1]]
    n_tri = tri_hp.shape[0]
    total = 0.0
    for t in range(n_tri):
        xs = base_x
        ys = base_y
        for e in range(3):
            xs, ys = _clip_plain(xs, ys, tri_hp[t, e, 0], tri_hp[t, e, 1], tri_hp[t, e, 2])
            if not xs:
                break
        if len(xs) < 3:
            continue
        al = tri_plane[t, 0]
        be = tri_plane[t, 1]
        ga = tri_plane[t, 2]
        x0 = xs[0]
        y0 = ys[0]
        f0 = al * x0 + be * y0 + ga
        for k in range(1, len(xs) - 1):
            x1 = xs[k]
            y1 = ys[k]
            x2 = xs[k + 1]
            y2 = ys[k + 1]
            area = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
            f1 = al * x1 + be * y1 + ga
            f2 = al * x2 + be * y2 + ga
            total += area * (f0 + f1 + f2) / 3.0
    return total


def poly_cost(verts, site_x, site_y, tri_hp, tri_plane):
    """Exact integral of |x - site|^2 * density over a convex polygon.

    The integrand is cubic on each mesh triangle, so the degree-3 quadrature
    is exact.
    """
    n = verts.shape[0]
    if n < 3:
        return 0.0
    base_x = [float(v) for v in verts[:, 0]]
    base_y = [float(v) for v in verts[:, 1]]
    n_tri = tri_hp.shape[0]
    total = 0.0
    for t in range(n_tri):
        xs = base_x
        ys = base_y
        for e in range(3):
            xs, ys = _clip_plain(xs, ys, tri_hp[t, e, 0], tri_hp[t, e, 1], tri_hp[t, e, 2])
            if not xs:
                break
        if len(xs) < 3:
            continue
        al = tri_plane[t, 0]
        be = tri_plane[t, 1]
        ga = tri_plane[t, 2]
        x0 = xs[0]
        y0 = ys[0]
        for k in range(1, len(xs) - 1):
            x1 = xs[k]
            y1 = ys[k]
            x2 = xs[k + 1]
            y2 = ys[k + 1]
            area = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
            acc = 0.0
            for q in range(4):
                u = _QP[q][0]
                v = _QP[q][1]
                px = x0 + u * (x1 - x0) + v * (x2 - x0)
                py = y0 + u * (y1 - y0) + v * (y2 - y0)
                ddx = px - site_x
                ddy = py - site_y
                acc += _QW[q] * (ddx * ddx + ddy * ddy) * (al * px + be * py + ga)
            total += area * acc
    return total


def segment_integral(x0, y0, x1, y1, tri_hp, tri_plane, tol_on):
    """Integrate the density along a segment; returns (integral, covered length).

    The segment is clipped against every mesh triangle in parameter space and
    the resulting intervals are merged so overlaps (segments lying on shared
    triangle edges) are counted once.  ``tri_hp`` rows must be normalized so
    ``tol_on`` acts as a geometric tolerance for on-boundary segments.
    """
    seg_len = math.hypot(x1 - x0, y1 - y0)
    if seg_len <= 0.0:
        return 0.0, 0.0
    n_tri = tri_hp.shape[0]
    intervals = []
    for t in range(n_tri):
        lo = 0.0
        hi = 1.0
        for e in range(3):
            a = tri_hp[t, e, 0]
            b = tri_hp[t, e, 1]
            c = tri_hp[t, e, 2]
            f0 = a * x0 + b * y0 - c - tol_on
            f1 = a * x1 + b * y1 - c - tol_on
            if f0 <= 0.0 and f1 <= 0.0:
                continue
            if f0 > 0.0 and f1 > 0.0:
                lo = 1.0
                hi = 0.0
                break
            tt = f0 / (f0 - f1)
            if f0 > 0.0:
                if tt > lo:
                    lo = tt
            else:
                if tt < hi:
                    hi = tt
        if hi - lo > 1e-15:
            intervals.append((lo, hi, t))
    intervals.sort(key=lambda iv: (iv[0], iv[2]))
    value = 0.0
    covered = 0.0
    reach = 0.0
    for lo, hi, t in intervals:
        a0 = lo if lo > reach else reach
        if hi <= a0:
            continue
        al = tri_plane[t, 0]
        be = tri_plane[t, 1]
        ga = tri_plane[t, 2]
        pax = x0 + a0 * (x1 - x0)
        pay = y0 + a0 * (y1 - y0)
        pbx = x0 + hi * (x1 - x0)
        pby = y0 + hi * (y1 - y0)
        fa = al * pax + be * pay + ga
        fb = al * pbx + be * pby + ga
        value += (hi - a0) * seg_len * 0.5 * (fa + fb)
        covered += (hi - a0) * seg_len
        reach = hi
    return value, covered
