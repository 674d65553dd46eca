# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled geometry/integration kernels.

Mirrors ``sdot._purekernels`` operation for operation (same arithmetic in the
same order), so the two backends agree to the last bit in practice.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport hypot, sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()

BACKEND_NAME = "compiled"
DOMAIN_TAG = -1

DEF QW0 = -27.0 / 48.0
DEF QW1 = 25.0 / 48.0


cdef int _clip_tagged(double* xs, double* ys, cnp.int64_t* tg, int n,
                      double a, double b, double c, cnp.int64_t new_tag,
                      double eps_dup, double* sides,
                      double* ox, double* oy, cnp.int64_t* ot) noexcept nogil:
    """Tagged convex clip by {a*x + b*y <= c}.

    Returns -1 when no vertex is strictly outside (input untouched), the new
    vertex count otherwise (0 for an empty result).
    """
    cdef int k, k1, m, cnt
    cdef double smin, smax, s0, s1, t, dx, dy
    if n == 0:
        return -1
    smin = 1e300
    smax = -1e300
    for k in range(n):
        s0 = c - a * xs[k] - b * ys[k]
        sides[k] = s0
        if s0 < smin:
            smin = s0
        if s0 > smax:
            smax = s0
    if smin >= 0.0:
        return -1
    if smax < 0.0:
        return 0

    m = 0
    for k in range(n):
        k1 = k + 1 if k + 1 < n else 0
        s0 = sides[k]
        s1 = sides[k1]
        if s0 >= 0.0:
            ox[m] = xs[k]
            oy[m] = ys[k]
            if s1 >= 0.0:
                ot[m] = tg[k]
                m += 1
            else:
                ot[m] = tg[k]
                m += 1
                t = s0 / (s0 - s1)
                ox[m] = xs[k] + t * (xs[k1] - xs[k])
                oy[m] = ys[k] + t * (ys[k1] - ys[k])
                ot[m] = new_tag
                m += 1
        elif s1 >= 0.0:
            t = s0 / (s0 - s1)
            ox[m] = xs[k] + t * (xs[k1] - xs[k])
            oy[m] = ys[k] + t * (ys[k1] - ys[k])
            ot[m] = tg[k]
            m += 1

    if m >= 3:
        cnt = 0
        for k in range(m):
            k1 = k + 1 if k + 1 < m else 0
            dx = ox[k1] - ox[k]
            dy = oy[k1] - oy[k]
            if hypot(dx, dy) > eps_dup:
                ox[cnt] = ox[k]
                oy[cnt] = oy[k]
                ot[cnt] = ot[k]
                cnt += 1
        m = cnt
    if m < 3:
        return 0
    return m


cdef int _clip_plain(double* xs, double* ys, int n,
                     double a, double b, double c, double* sides,
                     double* ox, double* oy) noexcept nogil:
    """Untagged convex clip; same return convention as _clip_tagged."""
    cdef int k, k1, m
    cdef double smin, smax, s0, s1, t
    if n == 0:
        return -1
    smin = 1e300
    smax = -1e300
    for k in range(n):
        s0 = c - a * xs[k] - b * ys[k]
        sides[k] = s0
        if s0 < smin:
            smin = s0
        if s0 > smax:
            smax = s0
    if smin >= 0.0:
        return -1
    if smax < 0.0:
        return 0
    m = 0
    for k in range(n):
        k1 = k + 1 if k + 1 < n else 0
        s0 = sides[k]
        s1 = sides[k1]
        if s0 >= 0.0:
            ox[m] = xs[k]
            oy[m] = ys[k]
            m += 1
            if s1 < 0.0:
                t = s0 / (s0 - s1)
                ox[m] = xs[k] + t * (xs[k1] - xs[k])
                oy[m] = ys[k] + t * (ys[k1] - ys[k])
                m += 1
        elif s1 >= 0.0:
            t = s0 / (s0 - s1)
            ox[m] = xs[k] + t * (xs[k1] - xs[k])
            oy[m] = ys[k] + t * (ys[k1] - ys[k])
            m += 1
    return m


def clip_cell_halfplane(const double[:, ::1] verts, const cnp.int64_t[::1] tags,
                        double a, double b, double c, long new_tag, double eps_dup):
    """Array wrapper around the tagged convex clip."""
    cdef int n = verts.shape[0]
    cdef int cap = n + 8
    cdef double* xs = <double*> malloc(5 * cap * sizeof(double))
    cdef cnp.int64_t* tg = <cnp.int64_t*> malloc(2 * cap * sizeof(cnp.int64_t))
    if xs == NULL or tg == NULL:
        free(xs); free(tg)
        raise MemoryError()
    cdef double* ys = xs + cap
    cdef double* sides = xs + 2 * cap
    cdef double* ox = xs + 3 * cap
    cdef double* oy = xs + 4 * cap
    cdef cnp.int64_t* ot = tg + cap
    cdef int k, m
    try:
        for k in range(n):
            xs[k] = verts[k, 0]
            ys[k] = verts[k, 1]
            tg[k] = tags[k]
        m = _clip_tagged(xs, ys, tg, n, a, b, c, new_tag, eps_dup, sides, ox, oy, ot)
        if m == -1:
            return np.asarray(verts).copy(), np.asarray(tags).copy()
        return _pack(ox, oy, ot, m)
    finally:
        free(xs)
        free(tg)


cdef _pack(double* ox, double* oy, cnp.int64_t* ot, int m):
    if m <= 0:
        return np.zeros((0, 2)), np.zeros(0, dtype=np.int64)
    out_v = np.empty((m, 2))
    out_t = np.empty(m, dtype=np.int64)
    cdef double[:, ::1] vv = out_v
    cdef cnp.int64_t[::1] tt = out_t
    cdef int k
    for k in range(m):
        vv[k, 0] = ox[k]
        vv[k, 1] = oy[k]
        tt[k] = ot[k]
    return out_v, out_t


def laguerre_cells(const double[:, ::1] domain, const double[:, ::1] sites, const double[::1] psi,
                   const cnp.int64_t[:, ::1] order, const double[:, ::1] suffix_min, double eps_dup):
    """Power cells of all sites; see the pure-Python twin for the contract."""
    cdef int n_sites = sites.shape[0]
    cdef int m_dom = domain.shape[0]
    cdef int cap = m_dom + n_sites + 8
    cdef double* buf = <double*> malloc(5 * cap * sizeof(double))
    cdef cnp.int64_t* tbuf = <cnp.int64_t*> malloc(2 * cap * sizeof(cnp.int64_t))
    if buf == NULL or tbuf == NULL:
        free(buf); free(tbuf)
        raise MemoryError()
    cdef double* xs = buf
    cdef double* ys = buf + cap
    cdef double* sides = buf + 2 * cap
    cdef double* bx = buf + 3 * cap
    cdef double* by = buf + 4 * cap
    cdef cnp.int64_t* tg = tbuf
    cdef cnp.int64_t* bt = tbuf + cap
    cdef double* tx
    cdef cnp.int64_t* tt
    cdef int i, p, k, n, ret
    cdef cnp.int64_t j
    cdef double xi, yi, pi, norm_i, r2max, dx, dy, d2, margin, gap, cc
    cells = []
    try:
        for i in range(n_sites):
            for k in range(m_dom):
                xs[k] = domain[k, 0]
                ys[k] = domain[k, 1]
                tg[k] = DOMAIN_TAG
            n = m_dom
            xi = sites[i, 0]
            yi = sites[i, 1]
            pi = psi[i]
            norm_i = xi * xi + yi * yi
            r2max = 0.0
            for k in range(n):
                dx = xs[k] - xi
                dy = ys[k] - yi
                d2 = dx * dx + dy * dy
                if d2 > r2max:
                    r2max = d2
            for p in range(n_sites - 1):
                j = order[i, p]
                dx = sites[j, 0] - xi
                dy = sites[j, 1] - yi
                d2 = dx * dx + dy * dy
                if d2 > r2max:
                    margin = sqrt(d2) - sqrt(r2max)
                    gap = margin * margin - r2max
                    if gap >= pi - suffix_min[i, p]:
                        break
                    if gap >= pi - psi[j]:
                        continue
                cc = (sites[j, 0] * sites[j, 0] + sites[j, 1] * sites[j, 1]) - norm_i + psi[j] - pi
                ret = _clip_tagged(xs, ys, tg, n, 2.0 * dx, 2.0 * dy, cc, j, eps_dup,
                                   sides, bx, by, bt)
                if ret == -1:
                    continue
                tx = xs; xs = bx; bx = tx
                tx = ys; ys = by; by = tx
                tt = tg; tg = bt; bt = tt
                n = ret
                if n == 0:
                    break
                r2max = 0.0
                for k in range(n):
                    dx = xs[k] - xi
                    dy = ys[k] - yi
                    d2 = dx * dx + dy * dy
                    if d2 > r2max:
                        r2max = d2
            cells.append(_pack(xs, ys, tg, n))
    finally:
        free(buf)
        free(tbuf)
    return cells


def poly_mass(const double[:, ::1] verts, const double[:, :, ::1] tri_hp, const double[:, ::1] tri_plane):
    """Exact integral of the piecewise-linear density over a convex polygon."""
    cdef int n = verts.shape[0]
    if n < 3:
        return 0.0
    cdef int n_tri = tri_hp.shape[0]
    cdef int cap = n + 8
    cdef double* buf = <double*> malloc(5 * cap * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* ax = buf
    cdef double* ay = buf + cap
    cdef double* bx = buf + 2 * cap
    cdef double* by = buf + 3 * cap
    cdef double* sides = buf + 4 * cap
    cdef double* xs
    cdef double* ys
    cdef double* ox
    cdef double* oy
    cdef double* tmp
    cdef int t, e, k, m, ret
    cdef double total = 0.0
    cdef double al, be, ga, x0, y0, f0, x1, y1, x2, y2, area, f1, f2
    try:
        for t in range(n_tri):
            for k in range(n):
                ax[k] = verts[k, 0]
                ay[k] = verts[k, 1]
            m = n
            xs = ax
            ys = ay
            ox = bx
            oy = by
            for e in range(3):
                ret = _clip_plain(xs, ys, m, tri_hp[t, e, 0], tri_hp[t, e, 1],
                                  tri_hp[t, e, 2], sides, ox, oy)
                if ret == -1:
                    continue
                tmp = xs; xs = ox; ox = tmp
                tmp = ys; ys = oy; oy = tmp
                m = ret
                if m == 0:
                    break
            if m < 3:
                continue
            al = tri_plane[t, 0]
            be = tri_plane[t, 1]
            ga = tri_plane[t, 2]
            x0 = xs[0]
            y0 = ys[0]
            f0 = al * x0 + be * y0 + ga
            for k in range(1, m - 1):
                x1 = xs[k]
                y1 = ys[k]
                x2 = xs[k + 1]
                y2 = ys[k + 1]
                area = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
                f1 = al * x1 + be * y1 + ga
                f2 = al * x2 + be * y2 + ga
                total += area * (f0 + f1 + f2) / 3.0
    finally:
        free(buf)
    return total


def poly_cost(const double[:, ::1] verts, double site_x, double site_y,
              const double[:, :, ::1] tri_hp, const double[:, ::1] tri_plane):
    """Exact integral of |x - site|^2 * density over a convex polygon."""
    cdef int n = verts.shape[0]
    if n < 3:
        return 0.0
    cdef int n_tri = tri_hp.shape[0]
    cdef int cap = n + 8
    cdef double* buf = <double*> malloc(5 * cap * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* ax = buf
    cdef double* ay = buf + cap
    cdef double* bx = buf + 2 * cap
    cdef double* by = buf + 3 * cap
    cdef double* sides = buf + 4 * cap
    cdef double* xs
    cdef double* ys
    cdef double* ox
    cdef double* oy
    cdef double* tmp
    cdef int t, e, k, m, ret, q
    cdef double total = 0.0
    cdef double al, be, ga, x0, y0, x1, y1, x2, y2, area, acc, u, v, px, py, ddx, ddy, w
    cdef double qu[4]
    cdef double qv[4]
    cdef double qw[4]
    qu[0] = 1.0 / 3.0; qv[0] = 1.0 / 3.0; qw[0] = QW0
    qu[1] = 0.6; qv[1] = 0.2; qw[1] = QW1
    qu[2] = 0.2; qv[2] = 0.6; qw[2] = QW1
    qu[3] = 0.2; qv[3] = 0.2; qw[3] = QW1
    try:
        for t in range(n_tri):
            for k in range(n):
                ax[k] = verts[k, 0]
                ay[k] = verts[k, 1]
            m = n
            xs = ax
            ys = ay
            ox = bx
            oy = by
            for e in range(3):
                ret = _clip_plain(xs, ys, m, tri_hp[t, e, 0], tri_hp[t, e, 1],
                                  tri_hp[t, e, 2], sides, ox, oy)
                if ret == -1:
                    continue
                tmp = xs; xs = ox; ox = tmp
                tmp = ys; ys = oy; oy = tmp
                m = ret
                if m == 0:
                    break
            if m < 3:
                continue
            al = tri_plane[t, 0]
            be = tri_plane[t, 1]
            ga = tri_plane[t, 2]
            x0 = xs[0]
            y0 = ys[0]
            for k in range(1, m - 1):
                x1 = xs[k]
                y1 = ys[k]
                x2 = xs[k + 1]
                y2 = ys[k + 1]
                area = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
                acc = 0.0
                for q in range(4):
                    u = qu[q]
                    v = qv[q]
                    px = x0 + u * (x1 - x0) + v * (x2 - x0)
                    py = y0 + u * (y1 - y0) + v * (y2 - y0)
                    ddx = px - site_x
                    ddy = py - site_y
                    acc += qw[q] * (ddx * ddx + ddy * ddy) * (al * px + be * py + ga)
                total += area * acc
    finally:
        free(buf)
    return total


def segment_integral(double x0, double y0, double x1, double y1,
                     const double[:, :, ::1] tri_hp, const double[:, ::1] tri_plane, double tol_on):
    """Density integral along a segment; returns (integral, covered length)."""
    cdef double seg_len = hypot(x1 - x0, y1 - y0)
    if seg_len <= 0.0:
        return 0.0, 0.0
    cdef int n_tri = tri_hp.shape[0]
    cdef double* los = <double*> malloc(2 * n_tri * sizeof(double))
    cdef int* idx = <int*> malloc(n_tri * sizeof(int))
    if los == NULL or idx == NULL:
        free(los); free(idx)
        raise MemoryError()
    cdef double* his = los + n_tri
    cdef int count = 0
    cdef int t, e, k, pos
    cdef double lo, hi, a, b, c, f0, f1, tt
    cdef double klo, khi
    cdef int kidx
    cdef double value = 0.0, covered = 0.0, reach = 0.0
    cdef double a0, al, be, ga, pax, pay, pbx, pby, fa, fb
    try:
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
                los[count] = lo
                his[count] = hi
                idx[count] = t
                count += 1
        # Insertion sort by (lo, triangle index); stable, matches the fallback.
        for k in range(1, count):
            klo = los[k]
            khi = his[k]
            kidx = idx[k]
            pos = k - 1
            while pos >= 0 and (los[pos] > klo or (los[pos] == klo and idx[pos] > kidx)):
                los[pos + 1] = los[pos]
                his[pos + 1] = his[pos]
                idx[pos + 1] = idx[pos]
                pos -= 1
            los[pos + 1] = klo
            his[pos + 1] = khi
            idx[pos + 1] = kidx
        for k in range(count):
            lo = los[k]
            hi = his[k]
            t = idx[k]
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
    finally:
        free(los)
        free(idx)
    return value, covered
