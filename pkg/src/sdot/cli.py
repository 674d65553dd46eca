"""Command-line front end: generate problems, run the solver, verify solutions.

Exit codes: 0 success, 1 parse/usage errors (and failed verification checks),
2 invalid initial potential, 3 non-convergence.
"""

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from ._backend import backend_name
from .diagnostics import graph_from_hessian, verify_cheeger_inequality
from .exceptions import SdotError
from .functional import eval_hessian, eval_masses, eval_phi
from .geometry import LaguerreDiagram
from .oracle import RngSpec, duality_certificate, mc_masses
from .problems import (
    GENERATOR_KINDS,
    Problem,
    generate,
    load_problem,
    serialize_problem,
)
from .solver import SolveStatus, solve

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_BAD_INITIAL = 2
EXIT_NO_CONVERGENCE = 3


def _write_atomic(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sdot-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_or_exit(path: str) -> Problem:
    try:
        return load_problem(path)
    except FileNotFoundError:
        print(f"error: no such file: {path}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)
    except json.JSONDecodeError as exc:
        print(
            f"error: {path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            file=sys.stderr,
        )
        raise SystemExit(EXIT_PARSE)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _svg_frame(domain, diagram: LaguerreDiagram) -> str:
    xmin, ymin, xmax, ymax = domain.bounds()
    pad = 0.02 * max(xmax - xmin, ymax - ymin)
    stroke = 0.002 * max(xmax - xmin, ymax - ymin)
    buf = io.StringIO()
    buf.write(
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{xmin - pad} {ymin - pad} {xmax - xmin + 2 * pad} {ymax - ymin + 2 * pad}">\n'
    )
    # One polygon element per cell (empty cells give an empty point list),
    # plus the domain outline as a path.
    for i, cell in enumerate(diagram.cells):
        if cell.is_empty:
            pts = ""
        else:
            v = cell.vertices
            pts = " ".join(f"{x:.6g},{ymax + ymin - y:.6g}" for x, y in v)
        hue = (i * 137) % 360
        buf.write(
            f'<polygon points="{pts}" fill="hsl({hue},60%,72%)" '
            f'stroke="black" stroke-width="{stroke:.6g}"/>\n'
        )
    d = domain.vertices
    path = "M " + " L ".join(f"{x:.6g} {ymax + ymin - y:.6g}" for x, y in d) + " Z"
    buf.write(f'<path d="{path}" fill="none" stroke="blue" stroke-width="{2 * stroke:.6g}"/>\n')
    buf.write("</svg>\n")
    return buf.getvalue()


def _write_outputs(out_dir: str, problem: Problem, report, final_diagram) -> None:
    os.makedirs(out_dir, exist_ok=True)

    psi_doc = {"schema": "1", "psi": [float(v) for v in report.psi]}
    _write_atomic(os.path.join(out_dir, "psi.json"), json.dumps(psi_doc, indent=1) + "\n")

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["iter", "residual_l2", "residual_inf", "step_exponent", "min_mass", "phi"])
    for rec in report.iterations:
        writer.writerow(
            [
                rec.iteration,
                repr(rec.residual_l2),
                repr(rec.residual_inf),
                rec.step_exponent,
                repr(rec.min_mass),
                repr(rec.phi),
            ]
        )
    _write_atomic(os.path.join(out_dir, "trace.csv"), buf.getvalue())

    from .functional import masses_from_diagram

    masses = masses_from_diagram(problem.density, final_diagram)
    features = []
    for i, cell in enumerate(final_diagram.cells):
        if cell.is_empty:
            geometry = None
        else:
            ring = cell.vertices.tolist()
            ring.append(ring[0])
            geometry = {"type": "Polygon", "coordinates": [ring]}
        features.append(
            {
                "type": "Feature",
                "geometry": geometry,
                "properties": {
                    "site": i,
                    "site_point": problem.targets.points[i].tolist(),
                    "mass": float(masses[i]),
                    "target_mass": float(problem.targets.masses[i]),
                },
            }
        )
    geojson = {"type": "FeatureCollection", "features": features}
    _write_atomic(os.path.join(out_dir, "cells.geojson"), json.dumps(geojson) + "\n")


def _cmd_run(args) -> int:
    problem = _load_or_exit(args.problem)
    config = problem.config
    overrides = {}
    if args.eta is not None:
        overrides["eta"] = args.eta
    if args.max_iter is not None:
        overrides["max_iter"] = args.max_iter
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)

    frames = {}
    last = {}

    def callback(k, psi, diagram):
        last["diagram"] = diagram
        if args.svg_frames:
            frames[k] = _svg_frame(problem.domain, diagram)

    try:
        report = solve(
            problem.domain, problem.density, problem.targets, config=config, callback=callback
        )
    except SdotError as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    if report.status is SolveStatus.BAD_INITIAL:
        bad = report.bad_sites.tolist() if report.bad_sites is not None else []
        print(
            "error: invalid initial potential: zero-mass cells at sites "
            f"{bad} (epsilon0 = {report.epsilon0:g})",
            file=sys.stderr,
        )
        return EXIT_BAD_INITIAL

    _write_outputs(args.out, problem, report, last["diagram"])
    if args.svg_frames:
        for k, svg in frames.items():
            _write_atomic(os.path.join(args.out, f"frame_{k}.svg"), svg)

    final = report.iterations[-1]
    print(
        f"{report.status.value}: {len(report.iterations) - 1} iterations, "
        f"residual_l2={final.residual_l2:.3e}, phi={final.phi:.12g} "
        f"[{backend_name()} kernels]"
    )
    if report.status is not SolveStatus.CONVERGED:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_verify(args) -> int:
    problem = _load_or_exit(args.problem)
    rng = np.random.default_rng(args.seed)
    n = len(problem.targets)

    try:
        report = solve(problem.domain, problem.density, problem.targets, config=problem.config)
    except SdotError as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    if report.status is SolveStatus.BAD_INITIAL:
        bad = report.bad_sites.tolist() if report.bad_sites is not None else []
        print(f"error: invalid initial potential (zero-mass cells at {bad})", file=sys.stderr)
        return EXIT_BAD_INITIAL
    if report.status is not SolveStatus.CONVERGED:
        print(f"error: solver did not converge ({report.status.value})", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    psi = report.psi

    checks = []
    scale = problem.domain.diameter
    step = 1e-5 * scale * scale

    def phi_of(p):
        return eval_phi(problem.domain, problem.density, problem.targets, p)

    def g_of(p):
        return eval_masses(problem.domain, problem.density, problem.targets, p)

    g_star = g_of(psi)
    grad_exact = g_star - problem.targets.masses

    # Finite differences on a coordinate subset keep verification O(1) in n.
    coords = rng.choice(n, size=min(n, args.fd_coords), replace=False)
    err_g = 0.0
    for i in coords:
        e = np.zeros(n)
        e[i] = step
        fd = (phi_of(psi + e) - phi_of(psi - e)) / (2.0 * step)
        err_g = max(err_g, abs(fd - grad_exact[i]) / max(1.0, abs(grad_exact[i])))
    checks.append(("gradient finite differences", err_g < 1e-5, f"max rel err {err_g:.2e}"))

    hess = eval_hessian(problem.domain, problem.density, problem.targets, psi)
    err_h = 0.0
    for i in coords:
        e = np.zeros(n)
        e[i] = step
        col = (g_of(psi + e) - g_of(psi - e)) / (2.0 * step)
        err_h = max(err_h, float(np.abs(col - hess.matrix[:, i]).max()))
    checks.append(("Hessian finite differences", err_h < 1e-4, f"max abs err {err_h:.2e}"))
    sym = float(np.abs(hess.matrix - hess.matrix.T).max())
    rows = float(np.abs(hess.matrix.sum(axis=1)).max())
    checks.append(("Hessian symmetry", sym <= 1e-12, f"max asym {sym:.2e}"))
    checks.append(("Hessian row sums", rows <= 1e-10, f"max |row sum| {rows:.2e}"))

    mc = mc_masses(
        problem.domain, problem.density, problem.targets, psi,
        RngSpec(seed=args.seed, sample_count=args.mc_samples),
    )
    dev = np.abs(mc.estimates - g_star)
    bandwidth = 3.0 * np.maximum(mc.stderr, 1e-12)
    mc_ok = bool(np.all(dev <= bandwidth))
    checks.append(
        ("Monte Carlo masses (3 sigma)", mc_ok, f"max |dev|/sigma {np.max(dev / bandwidth * 3.0):.2f}")
    )

    graph = graph_from_hessian(hess)
    lam2 = float(np.linalg.eigvalsh(graph.laplacian())[1])
    if n <= 20:
        cheeger = verify_cheeger_inequality(graph)
        checks.append(
            (
                "Cheeger inequality (exact)",
                cheeger.holds,
                f"lambda2 {cheeger.lambda2:.3e} >= bound {cheeger.bound:.3e}",
            )
        )
    else:
        h_sampled = _sampled_cheeger(graph, rng)
        bound = 0.5 * h_sampled * h_sampled * float(graph.degrees().min())
        note = f"lambda2 {lam2:.3e}, sampled bound {bound:.3e} (not exact)"
        checks.append(("Cheeger inequality (sampled)", lam2 > 0.0, note))

    cert = duality_certificate(
        problem.domain, problem.density, problem.targets, psi,
        grid_resolution=args.grid_resolution,
    )
    checks.append(
        ("duality certificate", abs(cert.gap) <= 5e-3, f"gap {cert.gap:.2e}")
    )

    width = max(len(name) for name, _, _ in checks)
    all_ok = True
    for name, ok, note in checks:
        flag = "PASS" if ok else "FAIL"
        all_ok &= ok
        print(f"{name:<{width}}  {flag}  {note}")
    return EXIT_OK if all_ok else EXIT_PARSE


def _sampled_cheeger(graph, rng, n_subsets: int = 512) -> float:
    """Upper bound on the Cheeger constant from singleton and random cuts."""
    w = graph.weights
    deg = graph.degrees()
    total = float(deg.sum())
    n = graph.n
    best = np.inf
    for i in range(n):
        cut = float(deg[i])
        best = min(best, cut / min(deg[i], total - deg[i]))
    for _ in range(n_subsets):
        s = rng.random(n) < rng.uniform(0.2, 0.8)
        if not s.any() or s.all():
            continue
        mass_s = float(deg[s].sum())
        internal = float(w[np.ix_(s, s)].sum())
        best = min(best, (mass_s - internal) / min(mass_s, total - mass_s))
    return float(best)


def _parse_rect(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected X0,Y0,X1,Y1")
    return tuple(parts)


def _cmd_gen(args) -> int:
    kind = args.kind
    if kind not in GENERATOR_KINDS:
        print(
            f"error: unknown kind {kind!r} (choose from {', '.join(GENERATOR_KINDS)})",
            file=sys.stderr,
        )
        return EXIT_PARSE
    params = {}
    if kind == "paper_fig":
        params["n"] = args.n if args.n is not None else 30
        if args.grid_rect is not None:
            params["grid_rect"] = args.grid_rect
    elif kind == "uniform_square":
        params["n"] = args.n if args.n is not None else 2
    elif kind == "annulus":
        params["r"] = args.r
        params["R"] = args.R_outer
        params["n_targets"] = args.n_targets
        params["resolution"] = args.resolution
    raw = generate(kind, **params)
    _write_atomic(args.out, serialize_problem(raw))
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdot",
        description="Semi-discrete optimal transport solver (quadratic cost, 2D).",
    )
    parser.add_argument("--version", action="version", version=f"sdot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a problem file and write outputs")
    p_run.add_argument("problem")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--svg-frames", action="store_true", help="write per-iteration SVG snapshots")
    p_run.add_argument("--eta", type=float, default=None, help="override stopping tolerance")
    p_run.add_argument("--max-iter", type=int, default=None, help="override iteration cap")
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="run oracle checks against a problem")
    p_verify.add_argument("problem")
    p_verify.add_argument("--seed", type=int, default=42)
    p_verify.add_argument("--mc-samples", type=int, default=1_000_000)
    p_verify.add_argument("--grid-resolution", type=int, default=200)
    p_verify.add_argument(
        "--fd-coords", type=int, default=12,
        help="number of coordinates checked by finite differences",
    )
    p_verify.set_defaults(func=_cmd_verify)

    p_gen = sub.add_parser("gen", help="generate a problem file")
    p_gen.add_argument("kind", help=f"one of: {', '.join(GENERATOR_KINDS)}")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--n", type=int, default=None, help="grid side (paper_fig) or site count (uniform_square)")
    p_gen.add_argument("--grid-rect", type=_parse_rect, default=None, help="target grid rectangle X0,Y0,X1,Y1")
    p_gen.add_argument("--r", type=float, default=1.0, help="annulus inner radius")
    p_gen.add_argument("--R", dest="R_outer", type=float, default=2.0, help="annulus outer radius")
    p_gen.add_argument("--n-targets", type=int, default=20)
    p_gen.add_argument("--resolution", type=int, default=64, help="annulus mesh resolution")
    p_gen.set_defaults(func=_cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
