import numpy as np
import pytest

from sdot.density import TriDensity
from sdot.functional import masses_from_diagram
from sdot.geometry import ConvexPolygon, TargetMeasure, laguerre_diagram
from sdot.problems import generate, parse_problem, serialize_problem


@pytest.fixture(scope="session")
def unit_square():
    return ConvexPolygon.box(0.0, 0.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def uniform_density(unit_square):
    return TriDensity.uniform(unit_square)


@pytest.fixture(scope="session")
def two_sites():
    return TargetMeasure.uniform([[0.25, 0.5], [0.75, 0.5]])


def paper_problem(n, grid_rect=None):
    """Parsed square-frame problem (round-tripped through the serializer)."""
    params = {"n": n}
    if grid_rect is not None:
        params["grid_rect"] = grid_rect
    raw = generate("paper_fig", **params)
    return parse_problem(serialize_problem(raw))


def random_instance(seed, n_sites=10, min_mass=0.01, domain=None, density=None):
    """Random sites in the unit square whose Voronoi cells all carry
    at least ``min_mass``; returns (domain, density, targets, psi)."""
    rng = np.random.default_rng(seed)
    if domain is None:
        domain = ConvexPolygon.box(0.0, 0.0, 1.0, 1.0)
    if density is None:
        density = TriDensity.uniform(domain)
    for _ in range(200):
        pts = rng.uniform(0.08, 0.92, size=(n_sites, 2))
        targets = TargetMeasure.uniform(pts)
        psi = np.zeros(n_sites)
        diag = laguerre_diagram(domain, targets, psi)
        g = masses_from_diagram(density, diag)
        if g.min() >= min_mass:
            return domain, density, targets, psi
    raise RuntimeError("could not draw an instance with the requested mass floor")
