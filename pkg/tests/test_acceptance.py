"""Acceptance suite: one test per criterion, printed as a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
report.  Expensive artifacts (solver runs, random instances) are built once
per session and shared.
"""

import csv
import json
import math
import time

import numpy as np
import pytest

from sdot.cli import main
from sdot.diagnostics import graph_from_hessian, verify_cheeger_inequality
from sdot.functional import center_potential, eval_hessian, eval_masses, eval_phi
from sdot.geometry import laguerre_diagram
from sdot.oracle import RngSpec, duality_certificate, fd_gradient, fd_jacobian, mc_masses
from sdot.problems import generate, parse_problem, serialize_problem
from sdot.solver import SolveStatus, solve

from conftest import random_instance


def report(num, ok, detail):
    flag = "PASS" if ok else "FAIL"
    print(f"[{flag}] criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="session")
def cli_run(tmp_path_factory):
    """Run ``sdot run`` on gen paper_fig for n=10 and n=30; parse outputs."""
    out = {}
    for n in (10, 30):
        base = tmp_path_factory.mktemp(f"paper{n}")
        prob_path = base / "problem.json"
        rc_gen = main(["gen", "paper_fig", "--n", str(n), "--out", str(prob_path)])
        t0 = time.time()
        rc_run = main(["run", str(prob_path), "--out", str(base / "out")])
        elapsed = time.time() - t0
        with open(base / "out" / "trace.csv") as fh:
            rows = list(csv.DictReader(fh))
        psi = np.asarray(json.load(open(base / "out" / "psi.json"))["psi"])
        out[n] = {
            "rc_gen": rc_gen,
            "rc_run": rc_run,
            "elapsed": elapsed,
            "trace": rows,
            "psi": psi,
            "problem": parse_problem(serialize_problem(generate("paper_fig", n=n))),
        }
    return out


@pytest.fixture(scope="session")
def fd_instances():
    """20 seeded random instances, 10 sites each, all cell masses >= 0.01."""
    out = []
    for seed in range(300, 320):
        domain, density, targets, psi = random_instance(seed=seed, n_sites=10, min_mass=0.01)
        out.append((domain, density, targets, psi))
    return out


@pytest.fixture(scope="session")
def annulus_run():
    prob = parse_problem(serialize_problem(generate("annulus")))
    rep = solve(prob.domain, prob.density, prob.targets, config=prob.config)
    return prob, rep


@pytest.fixture(scope="session")
def random_solves():
    out = []
    for seed in (500, 501, 502):
        domain, density, targets, _ = random_instance(seed=seed, n_sites=10, min_mass=0.01)
        rep = solve(domain, density, targets)
        out.append((domain, density, targets, rep))
    return out


def _trace_floats(rows, key):
    return [float(r[key]) for r in rows]


def test_criterion_1_paper_reproduction(cli_run):
    ok = True
    details = []
    for n in (10, 30):
        run = cli_run[n]
        res = _trace_floats(run["trace"], "residual_l2")
        iters = len(run["trace"]) - 1
        ok &= run["rc_gen"] == 0 and run["rc_run"] == 0
        ok &= res[-1] <= 1e-9
        details.append(f"n={n}: {iters} iterations, final residual {res[-1]:.2e}")
        if n == 30:
            ok &= iters <= 40
            ok &= run["elapsed"] <= 300.0
            details.append(f"runtime {run['elapsed']:.1f}s")
    report(1, ok, "; ".join(details))


def test_criterion_2_per_iteration_contract(cli_run, annulus_run, random_solves):
    violations = 0
    checked = 0
    for n in (10, 30):
        rows = cli_run[n]["trace"]
        res = _trace_floats(rows, "residual_l2")
        mm = _trace_floats(rows, "min_mass")
        mu_min = float(min(cli_run[n]["problem"].targets.masses))
        eps0 = 0.5 * min(mm[0], mu_min)
        for k in range(1, len(rows)):
            ell = int(rows[k]["step_exponent"])
            checked += 1
            if res[k] > (1.0 - 2.0 ** -(ell + 1)) * res[k - 1]:
                violations += 1
            if mm[k] < eps0:
                violations += 1
    reports = [annulus_run[1]] + [r for _, _, _, r in random_solves]
    for rep in reports:
        recs = rep.iterations
        for prev, cur in zip(recs, recs[1:]):
            checked += 1
            if cur.residual_l2 > (1.0 - 2.0 ** -(cur.step_exponent + 1)) * prev.residual_l2:
                violations += 1
            if cur.min_mass < rep.epsilon0:
                violations += 1
    report(2, violations == 0, f"{checked} accepted steps checked, {violations} violations")


def test_criterion_3_quadratic_tail(cli_run):
    rows = cli_run[10]["trace"]
    res = _trace_floats(rows, "residual_l2")
    exps = [int(r["step_exponent"]) for r in rows]
    two_full = any(a == 0 and b == 0 for a, b in zip(exps[1:], exps[2:]))
    g1 = math.log2(res[-3] / res[-2])
    g2 = math.log2(res[-2] / res[-1])
    ok = two_full and g2 >= 2.0 * g1 - 1e-9
    report(3, ok, f"log2 gaps {g1:.2f} -> {g2:.2f} (doubling needs >= {2 * g1:.2f})")


def test_criterion_4_gradient_consistency(fd_instances):
    worst = 0.0
    for domain, density, targets, psi in fd_instances:
        step = 1e-5 * domain.diameter ** 2

        def phi(p):
            return eval_phi(domain, density, targets, p)

        fd = fd_gradient(phi, psi, step)
        grad = eval_masses(domain, density, targets, psi) - targets.masses
        worst = max(worst, np.linalg.norm(fd - grad) / np.linalg.norm(grad))
    report(4, worst < 1e-5, f"20 instances, worst relative gradient error {worst:.2e}")


def test_criterion_5_hessian_consistency(fd_instances):
    worst_fd = worst_sym = worst_row = 0.0
    for domain, density, targets, psi in fd_instances:
        step = 1e-5 * domain.diameter ** 2

        def g(p):
            return eval_masses(domain, density, targets, p)

        raw, _ = fd_jacobian(g, psi, step)
        h = eval_hessian(domain, density, targets, psi).matrix
        worst_fd = max(worst_fd, float(np.abs(raw - h).max()))
        worst_sym = max(worst_sym, float(np.abs(h - h.T).max()))
        worst_row = max(worst_row, float(np.abs(h.sum(axis=1)).max()))
    ok = worst_fd < 1e-4 and worst_sym <= 1e-12 and worst_row <= 1e-10
    report(
        5,
        ok,
        f"FD error {worst_fd:.2e} (<1e-4), asymmetry {worst_sym:.1e}, row sums {worst_row:.1e}",
    )


def test_criterion_6_cheeger_inequality(fd_instances):
    worst_slack = np.inf
    lam_min = np.inf
    count = 0
    for domain, density, targets, psi in fd_instances:
        h = eval_hessian(domain, density, targets, psi)
        rep = verify_cheeger_inequality(graph_from_hessian(h))
        count += 1
        worst_slack = min(worst_slack, rep.lambda2 - rep.bound)
        lam_min = min(lam_min, rep.lambda2)
        if not rep.holds or rep.lambda2 <= 0.0:
            report(6, False, f"violation: lambda2={rep.lambda2}, bound={rep.bound}")
    ok = worst_slack >= -1e-10 and lam_min > 0.0
    report(
        6,
        ok,
        f"{count} Hessian graphs (n=10): min(lambda2 - bound) = {worst_slack:.3e}, "
        f"min lambda2 = {lam_min:.3e} > 0",
    )


def test_criterion_7_monte_carlo_agreement():
    worst = 0.0
    for k, seed in enumerate(range(400, 410)):
        domain, density, targets, psi = random_instance(seed=seed, n_sites=10, min_mass=0.01)
        exact = eval_masses(domain, density, targets, psi)
        mc = mc_masses(domain, density, targets, psi, RngSpec(seed=1000 + k, sample_count=1_000_000))
        dev = np.abs(mc.estimates - exact) / np.maximum(mc.stderr, 1e-300)
        worst = max(worst, float(dev.max()))
        if not np.all(dev <= 3.0):
            report(7, False, f"seed {seed}: worst deviation {dev.max():.2f} sigma")
    report(7, worst <= 3.0, f"10 instances at 1e6 samples, worst deviation {worst:.2f} sigma")


def test_criterion_8_duality_certificate(cli_run, annulus_run, random_solves):
    rng = np.random.default_rng(77)
    entries = []
    for n in (10, 30):
        prob = cli_run[n]["problem"]
        entries.append((f"paper n={n}", prob.domain, prob.density, prob.targets, cli_run[n]["psi"]))
    prob, rep = annulus_run
    entries.append(("annulus", prob.domain, prob.density, prob.targets, rep.psi))
    for i, (domain, density, targets, rep) in enumerate(random_solves):
        entries.append((f"random {i}", domain, density, targets, rep.psi))

    worst_gap = 0.0
    ok = True
    for name, domain, density, targets, psi in entries:
        cert = duality_certificate(domain, density, targets, psi, grid_resolution=200)
        worst_gap = max(worst_gap, abs(cert.gap))
        v = center_potential(rng.normal(size=len(targets)))
        v *= 0.1 / np.linalg.norm(v)
        worse = duality_certificate(domain, density, targets, psi + v, grid_resolution=200)
        ok &= abs(cert.gap) <= 5e-3 and worse.gap > cert.gap
    report(8, ok, f"{len(entries)} converged solutions, worst |gap| {worst_gap:.2e} (<= 5e-3)")


def test_criterion_9_invariance_suite(random_solves):
    domain, density, targets, rep = random_solves[0]
    psi = rep.psi + 0.02 * np.sin(np.arange(len(targets)))
    base_phi = eval_phi(domain, density, targets, psi)
    base_g = eval_masses(domain, density, targets, psi)
    base_diag = laguerre_diagram(domain, targets, psi)
    worst = 0.0
    for c in (-5.0, 0.3, 17.0):
        shifted = psi + c
        worst = max(worst, abs(eval_phi(domain, density, targets, shifted) - base_phi))
        worst = max(worst, float(np.abs(eval_masses(domain, density, targets, shifted) - base_g).max()))
        diag = laguerre_diagram(domain, targets, shifted)
        for a, b in zip(base_diag.cells, diag.cells):
            if not a.is_empty:
                worst = max(worst, float(np.abs(a.vertices - b.vertices).max()))
        rep_c = solve(domain, density, targets, psi0=np.full(len(targets), c))
        worst = max(worst, float(np.abs(rep_c.psi - rep.psi).max()))
    report(9, worst <= 1e-8, f"largest shift-invariance defect {worst:.2e} (<= 1e-8)")


def test_criterion_10_annulus_support(annulus_run):
    prob, rep = annulus_run
    ok = rep.status is SolveStatus.CONVERGED
    final = rep.iterations[-1].residual_l2
    report(
        10,
        ok,
        f"annulus (r=1, R=2, 20 ring targets): {rep.status.value} in "
        f"{len(rep.iterations) - 1} iterations, residual {final:.2e}",
    )
