"""Damped Newton iteration for the semi-discrete transport equation G(psi) = mu.

Each step solves the Laplacian system through a rank-one regularized Cholesky
factorization (exact pseudo-inverse on the zero-sum subspace) and halves the
step (2^-l) until both the cell-mass floor and the residual-decrease
condition hold.  The mass floor is computed once from the initial potential
and frozen for the whole run.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .density import TriDensity
from .exceptions import DisconnectedHessian, NonZeroSumResidual
from .functional import HessianMatrix, center_potential, eval_hessian, eval_phi, masses_from_diagram
from .geometry import ConvexPolygon, TargetMeasure, _site_order, as_potential, laguerre_diagram

__all__ = [
    "SolverConfig",
    "SolveStatus",
    "IterationRecord",
    "SolveReport",
    "epsilon0",
    "newton_direction",
    "solve",
]

LAMBDA2_THRESHOLD = 1e-12

# Cell masses below integration roundoff are indistinguishable from empty
# cells; a start is only valid when the mass floor clears this noise level.
EPSILON0_NOISE = 1e-15


@dataclass(frozen=True)
class SolverConfig:
    """Stopping tolerance and iteration caps for the damped Newton loop.

    The residual norm is Euclidean everywhere (the infinity norm is reported
    alongside but never used for decisions); ``norm`` exists only to pin that
    choice.  ``max_backtrack`` of 40 puts the smallest step near 1e-12, below
    which the line search is floating-point dead.
    """

    eta: float = 1e-9
    max_iter: int = 100
    max_backtrack: int = 40
    norm: str = "l2"
    jiggle_init: bool = False
    jiggle_attempts: int = 5
    jiggle_scale: Optional[float] = None
    jiggle_seed: int = 0

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if self.max_iter < 1 or self.max_backtrack < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.norm != "l2":
            raise ValueError("only the Euclidean residual norm is supported")


class SolveStatus(Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    LINE_SEARCH_FAILED = "LineSearchFailed"
    BAD_INITIAL = "BadInitial"


@dataclass(frozen=True)
class IterationRecord:
    """State at an accepted iterate.

    ``step_exponent`` is the exponent l of the step that produced this
    iterate (-1 for the initial one), so each row's residual satisfies
    residual_k <= (1 - 2^-(l+1)) * residual_{k-1}.
    """

    iteration: int
    residual_l2: float
    residual_inf: float
    step_exponent: int
    min_mass: float
    phi: float


@dataclass
class SolveReport:
    psi: np.ndarray
    status: SolveStatus
    iterations: list = field(default_factory=list)
    epsilon0: float = 0.0
    bad_sites: Optional[np.ndarray] = None

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED

    def residuals(self) -> np.ndarray:
        return np.array([rec.residual_l2 for rec in self.iterations])


def epsilon0(g0: np.ndarray, mu: np.ndarray) -> float:
    """Mass floor for the whole run: half the smallest initial cell or target mass.

    May be nonpositive, which signals an invalid starting potential.
    """
    g0 = np.asarray(g0, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if g0.shape != mu.shape:
        raise ValueError("cell-mass and target-mass vectors must have equal length")
    return 0.5 * min(float(g0.min()), float(mu.min()))


def newton_direction(hessian: HessianMatrix, residual: np.ndarray) -> np.ndarray:
    """Solve L d = residual on the zero-sum subspace, L = -Hessian.

    The pseudo-inverse is realized by Cholesky of L + (1/n) 11^T; after
    subtracting the mean this equals the true pseudo-inverse applied to a
    zero-sum residual.  Raises DisconnectedHessian when the second Laplacian
    eigenvalue vanishes (empty cells or disconnected support).
    """
    r = np.asarray(residual, dtype=np.float64)
    n = hessian.n
    if r.shape != (n,):
        raise ValueError("residual length does not match the Hessian")
    if abs(r.sum()) > 1e-9:
        raise NonZeroSumResidual(f"residual sums to {r.sum()!r}, expected 0")
    if n == 1:
        return np.zeros(1)
    lap = hessian.laplacian()
    lam2 = scipy.linalg.eigh(lap, eigvals_only=True, subset_by_index=(1, 1))[0]
    if lam2 <= LAMBDA2_THRESHOLD:
        raise DisconnectedHessian(
            f"second Laplacian eigenvalue {lam2!r} is not positive; "
            "some cell is empty or the support is disconnected"
        )
    reg = lap + np.full((n, n), 1.0 / n)
    try:
        cho = scipy.linalg.cho_factor(reg)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - guarded by lam2
        raise DisconnectedHessian(str(exc)) from exc
    d = scipy.linalg.cho_solve(cho, r)
    return d - d.mean()


def solve(
    domain: ConvexPolygon,
    density: TriDensity,
    targets: TargetMeasure,
    psi0=None,
    config: Optional[SolverConfig] = None,
    callback: Optional[Callable] = None,
) -> SolveReport:
    """Run the damped Newton iteration until the residual drops below eta.

    The potential is re-centered to zero mean after every accepted step (the
    functional is shift-invariant, so this only pins the representative).
    ``callback(k, psi, diagram)`` is invoked at every accepted iterate,
    including the initial one.
    """
    cfg = config if config is not None else SolverConfig()
    n = len(targets)
    mu = targets.masses
    if psi0 is None:
        psi0 = np.zeros(n)
    psi0 = as_potential(psi0, n).copy()
    order = _site_order(targets.points)

    def evaluate(p):
        diagram = laguerre_diagram(domain, targets, p, site_order=order)
        return diagram, masses_from_diagram(density, diagram)

    diagram, g = evaluate(psi0)
    eps0 = epsilon0(g, mu)
    if eps0 <= EPSILON0_NOISE and cfg.jiggle_init:
        rng = np.random.default_rng(cfg.jiggle_seed)
        scale = cfg.jiggle_scale
        if scale is None:
            scale = 1e-3 * domain.diameter ** 2
        for _ in range(cfg.jiggle_attempts):
            trial0 = psi0 + rng.uniform(-scale, scale, n)
            diagram_t, g_t = evaluate(trial0)
            if epsilon0(g_t, mu) > EPSILON0_NOISE:
                psi0, diagram, g = trial0, diagram_t, g_t
                eps0 = epsilon0(g, mu)
                break
    if eps0 <= EPSILON0_NOISE:
        return SolveReport(
            psi=psi0,
            status=SolveStatus.BAD_INITIAL,
            epsilon0=eps0,
            bad_sites=np.flatnonzero(g <= 2.0 * EPSILON0_NOISE),
        )

    psi = center_potential(psi0)
    records = []
    status = SolveStatus.MAX_ITER
    exponent = -1
    prev_res = math.inf
    for k in range(cfg.max_iter + 1):
        residual = g - mu
        res_l2 = float(np.linalg.norm(residual))
        res_inf = float(np.abs(residual).max())
        min_mass = float(g.min())
        phi = eval_phi(domain, density, targets, psi, diagram=diagram, masses_vec=g)
        # Per-iteration contract of the accepted step, asserted as logged.
        if exponent >= 0:
            assert res_l2 <= (1.0 - 2.0 ** -(exponent + 1)) * prev_res
            assert min_mass >= eps0
        records.append(IterationRecord(k, res_l2, res_inf, exponent, min_mass, phi))
        if callback is not None:
            callback(k, psi, diagram)
        if res_l2 < cfg.eta:
            status = SolveStatus.CONVERGED
            break
        if k == cfg.max_iter:
            status = SolveStatus.MAX_ITER
            break

        hess = eval_hessian(domain, density, targets, psi, diagram=diagram)
        direction = newton_direction(hess, residual)

        accepted = False
        for ell in range(cfg.max_backtrack + 1):
            trial = center_potential(psi + (2.0 ** -ell) * direction)
            diagram_t, g_t = evaluate(trial)
            if g_t.min() < eps0:
                continue
            if np.linalg.norm(g_t - mu) <= (1.0 - 2.0 ** -(ell + 1)) * res_l2:
                accepted = True
                break
        if not accepted:
            status = SolveStatus.LINE_SEARCH_FAILED
            break
        psi, diagram, g = trial, diagram_t, g_t
        exponent = ell
        prev_res = res_l2

    return SolveReport(psi=psi, status=status, iterations=records, epsilon0=eps0)
