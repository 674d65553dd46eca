"""Kantorovich's dual functional: value, gradient data, and Hessian.

For quadratic cost the Hessian off-diagonal for a pair of neighboring sites
(y, z) is the density integral over their shared cell facet divided by
2 * |y - z|; diagonals make every row sum to zero, so the negated Hessian is
a weighted graph Laplacian.  The functional and its gradient are invariant
under adding a constant to the potential.
"""

from typing import Optional

import numpy as np

from .density import TriDensity, cost_integral, line_integral, mass
from .geometry import (
    ConvexPolygon,
    LaguerreDiagram,
    TargetMeasure,
    as_potential,
    laguerre_diagram,
)

__all__ = [
    "HessianMatrix",
    "eval_masses",
    "eval_phi",
    "eval_hessian",
    "center_potential",
    "masses_from_diagram",
]

# Facets shorter than this (relative to scale) are treated as clipping noise.
REL_EPS_FACET = 1e-12


class HessianMatrix:
    """Dense Hessian of the dual functional at a potential.

    Off-diagonal entries are nonnegative facet weights, each diagonal is
    minus its row sum, and the matrix is symmetric by construction (every
    facet is written to both entries).  On the boundary of the positive-mass
    region the functional stops being twice differentiable; there this is
    just the one-sided facet-integral matrix.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        m = np.ascontiguousarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Hessian must be square")
        m.flags.writeable = False
        self.matrix = m

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def weights(self) -> np.ndarray:
        """Off-diagonal weights with zeroed diagonal."""
        w = self.matrix.copy()
        np.fill_diagonal(w, 0.0)
        return w

    def laplacian(self) -> np.ndarray:
        """The weighted graph Laplacian -H (positive semidefinite)."""
        return -self.matrix

    def __repr__(self) -> str:
        return f"HessianMatrix(n={self.n})"


def center_potential(psi) -> np.ndarray:
    """Projection onto zero-mean potentials (the canonical representative)."""
    p = np.asarray(psi, dtype=np.float64)
    return p - p.mean()


def masses_from_diagram(density: TriDensity, diagram: LaguerreDiagram) -> np.ndarray:
    return np.array([mass(density, cell) for cell in diagram.cells])


def eval_masses(
    domain: ConvexPolygon,
    density: TriDensity,
    targets: TargetMeasure,
    psi,
    *,
    diagram: Optional[LaguerreDiagram] = None,
) -> np.ndarray:
    """Cell masses G(psi): the density mass of every Laguerre cell."""
    if diagram is None:
        diagram = laguerre_diagram(domain, targets, psi)
    return masses_from_diagram(density, diagram)


def eval_phi(
    domain: ConvexPolygon,
    density: TriDensity,
    targets: TargetMeasure,
    psi,
    nu: Optional[np.ndarray] = None,
    *,
    diagram: Optional[LaguerreDiagram] = None,
    masses_vec: Optional[np.ndarray] = None,
) -> float:
    """Dual functional value at ``psi``.

    Evaluated from the cell decomposition (cost integral plus price terms per
    cell), never by quadrature of the pointwise minimum, so it is exactly
    consistent with the gradient and Hessian.
    """
    psi = as_potential(psi, len(targets))
    if nu is None:
        nu = targets.masses
    else:
        nu = np.asarray(nu, dtype=np.float64)
    if diagram is None:
        diagram = laguerre_diagram(domain, targets, psi)
    if masses_vec is None:
        masses_vec = masses_from_diagram(density, diagram)
    transport = sum(
        cost_integral(density, cell, targets.points[i])
        for i, cell in enumerate(diagram.cells)
    )
    return float(transport + psi @ masses_vec - psi @ nu)


def eval_hessian(
    domain: ConvexPolygon,
    density: TriDensity,
    targets: TargetMeasure,
    psi,
    *,
    diagram: Optional[LaguerreDiagram] = None,
) -> HessianMatrix:
    """Hessian of the dual functional from the facet integrals.

    Each facet between cells i and j contributes the density line integral
    over the facet divided by 2 * |y_i - y_j| to both (i, j) entries; rows of
    an empty cell are zero.
    """
    psi = as_potential(psi, len(targets))
    if diagram is None:
        diagram = laguerre_diagram(domain, targets, psi)
    n = len(targets)
    eps_len = REL_EPS_FACET * domain.diameter
    h = np.zeros((n, n))
    pts = targets.points
    for i, cell_edges in enumerate(diagram.edges):
        for edge in cell_edges:
            j = edge.neighbor
            if j is None or j <= i:
                continue
            if edge.length <= eps_len:
                continue
            rho_facet = line_integral(density, (edge.start, edge.end))
            w = rho_facet / (2.0 * float(np.hypot(*(pts[i] - pts[j]))))
            h[i, j] += w
            h[j, i] += w
    diag = -h.sum(axis=1)
    np.fill_diagonal(h, diag)
    return HessianMatrix(h)
