"""Semi-discrete optimal transport in 2D with quadratic cost.

Builds Laguerre (power) tessellations of a convex domain, evaluates the dual
functional with exact integrals of a piecewise-linear source density, and
maximizes it with a globally convergent damped Newton iteration.  Diagnostic
helpers certify the concavity machinery (graph Laplacian spectrum, Cheeger
bound) and the observed convergence rates at small scale.

The geometric hot loops run in a compiled extension when available and fall
back to pure Python otherwise; set ``SDOT_BACKEND=python`` to force the
fallback.
"""

__version__ = "0.1.0"

from ._backend import backend_name
from .density import TriDensity, cost_integral, line_integral, mass
from .diagnostics import (
    CheegerReport,
    RateReport,
    WeightedGraph,
    annulus_density,
    cheeger_constant,
    graph_from_hessian,
    rate_analysis,
    tent_profile,
    verify_cheeger_inequality,
)
from .exceptions import (
    DimensionMismatch,
    DisconnectedHessian,
    EmptyDomain,
    InvalidProfile,
    NonZeroSumResidual,
    OutsideDomain,
    SdotError,
    SegmentOutsideDomain,
    TooLarge,
    TooShort,
)
from .functional import (
    HessianMatrix,
    center_potential,
    eval_hessian,
    eval_masses,
    eval_phi,
)
from .geometry import (
    CellEdge,
    ConvexPolygon,
    LaguerreDiagram,
    TargetMeasure,
    clip_polygon,
    laguerre_diagram,
    locate,
    transport_map,
)
from .oracle import (
    DualityCertificate,
    MonteCarloMasses,
    RngSpec,
    duality_certificate,
    fd_gradient,
    fd_jacobian,
    mc_masses,
)
from .problems import Problem, generate, load_problem, parse_problem, serialize_problem
from .solver import (
    IterationRecord,
    SolveReport,
    SolveStatus,
    SolverConfig,
    epsilon0,
    newton_direction,
    solve,
)
