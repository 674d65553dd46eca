import numpy as np
import pytest

from sdot.density import TriDensity, cost_integral, line_integral, mass
from sdot.exceptions import SegmentOutsideDomain
from sdot.geometry import ConvexPolygon
from sdot.problems import paper_fig_mesh

PAPER_RAW_INTEGRAL = 31.0 / 6.0  # block mesh: one transverse corner diagonal, rest parallel


@pytest.fixture(scope="module")
def paper_density():
    verts, tris, values = paper_fig_mesh()
    return TriDensity(verts, tris, values, hull=ConvexPolygon.box(0, 0, 3, 3))


class TestTriDensity:
    def test_normalizes_with_warning(self, caplog):
        sq = ConvexPolygon.box(0, 0, 2, 2)
        with caplog.at_level("WARNING", logger="sdot"):
            dens = TriDensity(
                sq.vertices, [(0, 1, 2), (0, 2, 3)], [3.0, 3.0, 3.0, 3.0], hull=sq
            )
        assert "normalizing density" in caplog.text
        assert dens.integral() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_negative_values(self, unit_square):
        with pytest.raises(ValueError):
            TriDensity(
                unit_square.vertices, [(0, 1, 2), (0, 2, 3)], [1, 1, -0.5, 1], hull=unit_square
            )

    def test_rejects_gapped_mesh(self, unit_square):
        with pytest.raises(ValueError):
            TriDensity(unit_square.vertices, [(0, 1, 2)], [1, 1, 1, 1], hull=unit_square)

    def test_paper_mesh_raw_integral(self):
        verts, tris, values = paper_fig_mesh()
        areas = []
        for a, b, c in tris:
            pa, pb, pc = verts[a], verts[b], verts[c]
            areas.append(
                0.5
                * abs(
                    (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])
                )
                * (values[a] + values[b] + values[c])
                / 3.0
            )
        assert sum(areas) == pytest.approx(PAPER_RAW_INTEGRAL, abs=1e-12)
        assert len(tris) == 18

    def test_paper_mesh_monte_carlo(self, paper_density):
        # Uniform sampling oracle for the raw integral (values scale by the
        # normalization constant, so compare against 1).
        rng = np.random.default_rng(42)
        pts = rng.uniform(0.0, 3.0, size=(1_000_000, 2))
        vals = paper_density.evaluate(pts)
        est = vals.mean() * 9.0
        sigma = vals.std() * 9.0 / np.sqrt(len(pts))
        assert abs(est - 1.0) <= 3.0 * sigma

    def test_vanishes_on_inner_square(self, paper_density):
        rng = np.random.default_rng(3)
        pts = rng.uniform(1.0, 2.0, size=(500, 2))
        np.testing.assert_allclose(paper_density.evaluate(pts), 0.0, atol=1e-15)

    def test_boundary_value(self, paper_density):
        scale = 1.0 / PAPER_RAW_INTEGRAL
        got = paper_density.evaluate([[0.0, 1.3], [1.7, 3.0], [3.0, 3.0]])
        np.testing.assert_allclose(got, scale, atol=1e-12)


class TestMass:
    def test_uniform_half(self, uniform_density):
        assert mass(uniform_density, ConvexPolygon.box(0, 0, 0.5, 1)) == pytest.approx(0.5)

    def test_centroid_rule_exact_for_linear(self):
        # Raw integral over the triangle (0,0),(1,0),(0,1) with values
        # (0,0,3) is area * mean = 0.5; the constructor normalizes by it.
        tri = ConvexPolygon([(0, 0), (1, 0), (0, 1)])
        dens = TriDensity(tri.vertices, [(0, 1, 2)], [0.0, 0.0, 3.0], hull=tri)
        assert mass(dens, tri) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(dens.values, [0.0, 0.0, 6.0])

    def test_paper_mesh_full_domain(self, paper_density):
        assert mass(paper_density, ConvexPolygon.box(0, 0, 3, 3)) == pytest.approx(
            1.0, abs=1e-9
        )

    def test_empty_polygon(self, uniform_density):
        assert mass(uniform_density, ConvexPolygon.empty()) == 0.0

    def test_additive_on_shared_edge(self, paper_density):
        rng = np.random.default_rng(5)
        for _ in range(20):
            x0, x1 = np.sort(rng.uniform(0, 3, 2))
            y0, y1 = np.sort(rng.uniform(0, 3, 2))
            if x1 - x0 < 1e-3 or y1 - y0 < 1e-3:
                continue
            xm = rng.uniform(x0, x1)
            whole = mass(paper_density, ConvexPolygon.box(x0, y0, x1, y1))
            left = mass(paper_density, ConvexPolygon.box(x0, y0, xm, y1))
            right = mass(paper_density, ConvexPolygon.box(xm, y0, x1, y1))
            assert left + right == pytest.approx(whole, abs=1e-10)


class TestCostIntegral:
    def test_unit_square_center(self, uniform_density, unit_square):
        assert cost_integral(uniform_density, unit_square, (0.5, 0.5)) == pytest.approx(
            1.0 / 6.0, abs=1e-14
        )

    def test_empty_polygon(self, uniform_density):
        assert cost_integral(uniform_density, ConvexPolygon.empty(), (0, 0)) == 0.0

    def test_far_site_asymptotic(self, uniform_density, unit_square):
        site = np.array([1000.5, 0.5])
        val = cost_integral(uniform_density, unit_square, site)
        d2 = 1000.0 ** 2  # distance from the site to the centroid
        assert abs(val - d2 * 1.0) / (d2 * 1.0) < 1e-3

    def test_positive_on_massive_polygons(self, paper_density):
        rng = np.random.default_rng(8)
        for _ in range(20):
            x0, y0 = rng.uniform(0.0, 2.4, 2)
            poly = ConvexPolygon.box(x0, y0, x0 + 0.5, y0 + 0.5)
            site = rng.uniform(0.0, 3.0, 2)
            val = cost_integral(paper_density, poly, site)
            assert val >= 0.0
            # zero only for massless polygons (a box never collapses to the site)
            if mass(paper_density, poly) > 0.0:
                assert val > 0.0

    def test_quadrature_exact_against_symbolic(self, paper_density):
        # Degree-3 quadrature must be exact: compare a clipped-piece integral
        # against sympy on a polygon crossing triangle boundaries.
        import sympy as sp

        x, y = sp.symbols("x y")
        poly = ConvexPolygon.box(0.25, 0.25, 1.5, 0.75)
        site = (0.1, 2.3)
        got = cost_integral(paper_density, poly, site)

        from sdot.geometry import clip_polygon

        total = sp.Integer(0)
        f_cost = (x - sp.Rational(1, 10)) ** 2 + (y - sp.Rational(23, 10)) ** 2
        for t in range(paper_density.triangles.shape[0]):
            a, b, c = (sp.nsimplify(v) for v in paper_density.tri_plane[t])
            rho = a * x + b * y + c
            # Clip numerically, then integrate the piece symbolically.
            piece = poly
            for e in range(3):
                hp = paper_density.tri_hp[t, e]
                piece = clip_polygon(piece, ((hp[0], hp[1]), hp[2]))
                if piece.is_empty:
                    break
            if piece.is_empty or piece.n_vertices < 3:
                continue
            v = piece.vertices
            for k in range(1, v.shape[0] - 1):
                tri_pts = [v[0], v[k], v[k + 1]]
                res = _sympy_triangle_integral(f_cost * rho, x, y, tri_pts)
                total += res
        assert got == pytest.approx(float(total), rel=1e-12)


def _sympy_triangle_integral(expr, x, y, pts):
    import sympy as sp

    (x0, y0), (x1, y1), (x2, y2) = [(sp.Float(p[0], 17), sp.Float(p[1], 17)) for p in pts]
    u, v = sp.symbols("u v")
    xm = x0 + u * (x1 - x0) + v * (x2 - x0)
    ym = y0 + u * (y1 - y0) + v * (y2 - y0)
    jac = sp.Abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
    inner = sp.integrate(expr.subs({x: xm, y: ym}), (v, 0, 1 - u))
    return sp.integrate(inner, (u, 0, 1)) * jac


class TestLineIntegral:
    def test_constant_density(self, uniform_density):
        seg = ((0.1, 0.2), (0.7, 0.2))
        assert line_integral(uniform_density, seg) == pytest.approx(0.6, abs=1e-12)

    def test_trapezoid_exact_in_one_triangle(self):
        # Density rising linearly 0 -> 2 along a unit segment integrates to 1
        # (before the constructor's normalization; scale the answer back).
        tri = ConvexPolygon([(0, 0), (1, 0), (0.5, 2)])
        dens = TriDensity(tri.vertices, [(0, 1, 2)], [0.0, 2.0, 2.0], hull=tri)
        raw_total = tri.area * (0.0 + 2.0 + 2.0) / 3.0
        seg = ((0.25, 0.02), (0.75, 0.02))
        got = line_integral(dens, seg)
        # rho is linear in x along y=0.02: endpoints interpolate the raw 0->2
        # ramp; compute the trapezoid directly from evaluated endpoints.
        vals = dens.evaluate([seg[0], seg[1]])
        assert got == pytest.approx(0.5 * (vals[0] + vals[1]) * 0.5, rel=1e-12)
        assert raw_total > 0

    def test_crossing_triangles_against_midpoint_rule(self, paper_density):
        rng = np.random.default_rng(17)
        for _ in range(10):
            p0 = rng.uniform(0.2, 2.8, 2)
            p1 = rng.uniform(0.2, 2.8, 2)
            got = line_integral(paper_density, (p0, p1))
            ts = (np.arange(10_000) + 0.5) / 10_000
            pts = p0[None, :] + ts[:, None] * (p1 - p0)[None, :]
            vals = paper_density.evaluate(pts)
            ref = vals.mean() * np.hypot(*(p1 - p0))
            assert got == pytest.approx(ref, abs=1e-6)

    def test_segment_on_shared_mesh_edge_counted_once(self, paper_density):
        # x = 1 is a mesh edge between blocks; rho is continuous across it.
        got = line_integral(paper_density, ((1.0, 0.25), (1.0, 0.75)))
        vals = paper_density.evaluate([[1.0, 0.25], [1.0, 0.75]])
        assert got == pytest.approx(0.5 * 0.5 * (vals[0] + vals[1]), rel=1e-9)

    def test_outside_domain_raises(self, uniform_density):
        with pytest.raises(SegmentOutsideDomain):
            line_integral(uniform_density, ((0.5, 0.5), (1.5, 0.5)))

    def test_nonnegative_and_scales(self, paper_density):
        seg = ((0.2, 0.4), (2.5, 1.1))
        v = line_integral(paper_density, seg)
        assert v >= 0.0
