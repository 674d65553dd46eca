"""Benchmark the compiled kernels against the pure-Python fallback.

Times the three hot kernels (cell construction, polygon mass, facet
integrals) in-process on both kernel modules, then an end-to-end solve per
backend in a subprocess (backend selection happens at import).

Usage: python3 benchmarks/bench_backends.py [--n 20] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from sdot import _purekernels  # noqa: E402
from sdot.geometry import _site_order, _suffix_min, laguerre_diagram  # noqa: E402
from sdot.problems import generate, parse_problem, serialize_problem  # noqa: E402

try:
    from sdot import _core
except ImportError:
    _core = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(problem, repeat):
    domain = problem.domain
    targets = problem.targets
    density = problem.density
    n = len(targets)
    psi = np.zeros(n)
    order = _site_order(targets.points)
    suffix = _suffix_min(psi, order)
    eps = 1e-12 * domain.diameter
    diagram = laguerre_diagram(domain, targets, psi)
    cells = [c.vertices for c in diagram.cells if not c.is_empty]
    seg = np.array([0.3, 0.4, 2.6, 2.5])

    rows = []
    backends = [("python", _purekernels)] + ([("compiled", _core)] if _core else [])
    for name, kern in backends:
        t_cells = _time(
            lambda: kern.laguerre_cells(domain.vertices, targets.points, psi, order, suffix, eps),
            repeat,
        )
        t_mass = _time(
            lambda: [kern.poly_mass(v, density.tri_hp, density.tri_plane) for v in cells],
            repeat,
        )
        t_seg = _time(
            lambda: [
                kern.segment_integral(seg[0], seg[1], seg[2], seg[3], density.tri_hp, density.tri_plane, 1e-12)
                for _ in range(200)
            ],
            repeat,
        )
        rows.append((name, t_cells, t_mass, t_seg))
    return rows


def bench_solve(prob_text, backend):
    script = (
        "import sys, time, json\n"
        "import sdot\n"
        "from sdot.problems import parse_problem\n"
        "prob = parse_problem(sys.stdin.read())\n"
        "t0 = time.perf_counter()\n"
        "rep = sdot.solve(prob.domain, prob.density, prob.targets, config=prob.config)\n"
        "dt = time.perf_counter() - t0\n"
        "print(json.dumps({'backend': sdot.backend_name(), 'seconds': dt,"
        " 'iterations': len(rep.iterations) - 1, 'status': rep.status.value}))\n"
    )
    env = dict(os.environ, SDOT_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, "-c", script], input=prob_text, capture_output=True, text=True, env=env
    )
    if proc.returncode != 0:
        raise RuntimeError(proc.stderr)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20, help="target grid side for the benchmark problem")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    raw = generate("paper_fig", n=args.n)
    text = serialize_problem(raw)
    problem = parse_problem(text)
    n_sites = len(problem.targets)
    print(f"benchmark problem: square-frame density, {n_sites} target sites\n")

    rows = bench_kernels(problem, args.repeat)
    print(f"{'kernel backend':<16} {'diagram':>10} {'masses':>10} {'200 segs':>10}")
    base = rows[0]
    for name, t_cells, t_mass, t_seg in rows:
        print(f"{name:<16} {t_cells * 1e3:>8.1f}ms {t_mass * 1e3:>8.1f}ms {t_seg * 1e3:>8.1f}ms")
    if len(rows) == 2:
        speedups = [base[i] / rows[1][i] for i in (1, 2, 3)]
        print(
            f"{'speedup':<16} {speedups[0]:>9.1f}x {speedups[1]:>9.1f}x {speedups[2]:>9.1f}x"
        )

    print("\nend-to-end damped Newton solve:")
    results = [bench_solve(text, "python")]
    if _core is not None:
        results.append(bench_solve(text, "compiled"))
    for r in results:
        print(
            f"{r['backend']:<16} {r['seconds']:>8.2f}s  {r['iterations']} iterations ({r['status']})"
        )
    if len(results) == 2:
        print(f"{'speedup':<16} {results[0]['seconds'] / results[1]['seconds']:>8.1f}x")


if __name__ == "__main__":
    main()
