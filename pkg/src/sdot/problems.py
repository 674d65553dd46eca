"""Problem files: schema-versioned JSON with domain, density mesh, and targets.

Floats are serialized with 17 significant digits so parse -> serialize is
byte-stable, and the target block supports an n-by-n grid shorthand.  The
generators produce the bundled problem kinds: the square-frame density with a
grid target, a uniform square with a small site layout, and the annulus
density with targets on a ring.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .density import TriDensity
from .diagnostics import annulus_density
from .geometry import ConvexPolygon, TargetMeasure
from .solver import SolverConfig

__all__ = [
    "Problem",
    "SCHEMA_VERSION",
    "load_problem",
    "parse_problem",
    "serialize_problem",
    "generate",
    "paper_fig_mesh",
    "GENERATOR_KINDS",
]

SCHEMA_VERSION = "1"
GENERATOR_KINDS = ("paper_fig", "uniform_square", "annulus")


@dataclass
class Problem:
    domain: ConvexPolygon
    density: TriDensity
    targets: TargetMeasure
    config: SolverConfig
    raw: dict


def parse_problem(text: str) -> Problem:
    """Parse a problem JSON document (raises json.JSONDecodeError, ValueError)."""
    raw = json.loads(text)
    if not isinstance(raw, dict):
        raise ValueError("problem file must be a JSON object")
    if raw.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version: {raw.get('schema')!r}")
    for key in ("domain", "density", "targets"):
        if key not in raw:
            raise ValueError(f"problem file is missing the '{key}' section")

    domain = ConvexPolygon(np.asarray(raw["domain"], dtype=np.float64))

    dens = raw["density"]
    density = TriDensity(
        np.asarray(dens["vertices"], dtype=np.float64),
        np.asarray(dens["triangles"], dtype=np.int64),
        np.asarray(dens["values"], dtype=np.float64),
    )

    targets = _parse_targets(raw["targets"])

    solver_kwargs = dict(raw.get("solver", {}))
    config = SolverConfig(**solver_kwargs)
    return Problem(domain, density, targets, config, raw)


def load_problem(path) -> Problem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem(fh.read())


def _parse_targets(block) -> TargetMeasure:
    if not isinstance(block, dict):
        raise ValueError("targets must be an object")
    if "grid" in block:
        grid = block["grid"]
        n = int(grid["n"])
        if n < 2:
            raise ValueError("grid side must be at least 2")
        x0, y0, x1, y1 = (float(v) for v in grid["rect"])
        xs = x0 + (x1 - x0) * np.arange(n) / (n - 1)
        ys = y0 + (y1 - y0) * np.arange(n) / (n - 1)
        gx, gy = np.meshgrid(xs, ys)
        points = np.column_stack([gx.ravel(), gy.ravel()])
        return TargetMeasure.uniform(points)
    points = np.asarray(block["points"], dtype=np.float64)
    masses = block.get("masses", "uniform")
    if isinstance(masses, str):
        if masses != "uniform":
            raise ValueError(f"unknown masses spec: {masses!r}")
        return TargetMeasure.uniform(points)
    return TargetMeasure(points, np.asarray(masses, dtype=np.float64))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        items = ", ".join(_fmt(v) for v in value)
        return f"[{items}]"
    if isinstance(value, dict):
        items = ", ".join(f"{json.dumps(k)}: {_fmt(v)}" for k, v in value.items())
        return "{" + items + "}"
    raise TypeError(f"cannot serialize {type(value)!r}")


def serialize_problem(raw: dict) -> str:
    """Canonical one-section-per-line serialization; stable under round trips."""
    lines = ['{', f'  "schema": {json.dumps(raw["schema"])},']
    for key in ("domain", "density", "targets", "solver"):
        if key not in raw:
            continue
        lines.append(f'  "{key}": {_fmt(raw[key])},')
    lines[-1] = lines[-1].rstrip(",")
    lines.append("}")
    return "\n".join(lines) + "\n"


def paper_fig_mesh():
    """The square-frame density mesh: a 3x3 block grid on [0, 3]^2, 18 triangles.

    Values are 1 on the outer boundary and 0 at the corners of the middle
    block, so the density vanishes identically on [1, 2]^2 and the support is
    a non-convex, non-simply-connected frame.  Block diagonals run parallel
    to the main diagonal except in the bottom-left block, whose diagonal is
    transverse; the mesh is symmetric under the x <-> y reflection, the
    symmetry of the corner-grid transport instance it ships with.
    """
    verts = np.array([(float(i), float(j)) for j in range(4) for i in range(4)])
    values = np.array(
        [1.0 if (i in (0, 3) or j in (0, 3)) else 0.0 for j in range(4) for i in range(4)]
    )

    def vid(i, j):
        return 4 * j + i

    # Per block: the pair of corner indices forming the diagonal.
    diagonals = {
        (0, 0): ((1, 0), (0, 1)),
        (1, 0): ((1, 0), (2, 1)),
        (2, 0): ((2, 0), (3, 1)),
        (0, 1): ((0, 1), (1, 2)),
        (1, 1): ((1, 1), (2, 2)),
        (2, 1): ((2, 1), (3, 2)),
        (0, 2): ((0, 2), (1, 3)),
        (1, 2): ((1, 2), (2, 3)),
        (2, 2): ((2, 2), (3, 3)),
    }
    tris = []
    for (bx, by), (d0, d1) in diagonals.items():
        corners = [(bx, by), (bx + 1, by), (bx + 1, by + 1), (bx, by + 1)]
        others = [c for c in corners if c not in (d0, d1)]
        for other in others:
            tris.append((vid(*d0), vid(*d1), vid(*other)))
    return verts, np.asarray(tris, dtype=np.int64), values


def _gen_paper_fig(n: int = 30, grid_rect=None) -> dict:
    # The grid defaults to [0, 1]^2: a full-domain grid would put sites deep
    # inside the zero-density block, whose initial cells carry no mass.
    if grid_rect is None:
        grid_rect = (0.0, 0.0, 1.0, 1.0)
    verts, tris, values = paper_fig_mesh()
    return {
        "schema": SCHEMA_VERSION,
        "domain": [[0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [0.0, 3.0]],
        "density": {
            "vertices": verts.tolist(),
            "triangles": tris.tolist(),
            "values": values.tolist(),
        },
        "targets": {"grid": {"n": int(n), "rect": [float(v) for v in grid_rect]}},
        "solver": {"eta": 1e-9, "max_iter": 100},
    }


def _gen_uniform_square(n: int = 2) -> dict:
    if n < 1:
        raise ValueError("need at least one site")
    rows = int(math.isqrt(n))
    while n % rows:
        rows -= 1
    cols = n // rows
    points = [
        [(j + 0.5) / cols, (i + 0.5) / rows] for i in range(rows) for j in range(cols)
    ]
    return {
        "schema": SCHEMA_VERSION,
        "domain": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        "density": {
            "vertices": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            "triangles": [[0, 1, 2], [0, 2, 3]],
            "values": [1.0, 1.0, 1.0, 1.0],
        },
        "targets": {"points": points, "masses": "uniform"},
        "solver": {"eta": 1e-9, "max_iter": 100},
    }


def _gen_annulus(r: float = 1.0, R: float = 2.0, n_targets: int = 20, resolution: int = 64) -> dict:
    density = annulus_density(r, R, mesh_resolution=resolution)
    mid = 0.5 * (r + R)
    angles = 2.0 * np.pi * np.arange(n_targets) / n_targets
    points = np.column_stack([mid * np.cos(angles), mid * np.sin(angles)])
    return {
        "schema": SCHEMA_VERSION,
        "domain": density.hull.vertices.tolist(),
        "density": {
            "vertices": density.vertices.tolist(),
            "triangles": density.triangles.tolist(),
            "values": density.values.tolist(),
        },
        "targets": {"points": points.tolist(), "masses": "uniform"},
        "solver": {"eta": 1e-9, "max_iter": 100},
    }


def generate(kind: str, **params) -> dict:
    """Build a problem dict of the given kind; see GENERATOR_KINDS."""
    if kind == "paper_fig":
        return _gen_paper_fig(**params)
    if kind == "uniform_square":
        return _gen_uniform_square(**params)
    if kind == "annulus":
        return _gen_annulus(**params)
    raise ValueError(f"unknown problem kind: {kind!r}")
