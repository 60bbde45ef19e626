"""Acceptance suite. Each test covers one numbered criterion and prints a
single PASS/FAIL line (visible with pytest -v via the test name, and in
captured output via the summary line)."""

import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.optimize import linprog

from robustkern.influence import fd_cross_check, influence_function
from robustkern.kernels import KernelSpec, gram_matrix
from robustkern.lab import ExperimentConfig, prefix_ratios, run_all_data, run_single_data
from robustkern.losses import (
    HUBER_DELTA,
    LossSpec,
    is_nonsmooth_at,
    loss_grad,
    loss_hess,
    loss_value,
)
from robustkern.metrics import EmpiricalMeasure, kantorovich_1d
from robustkern.solver import Dataset, ErmProblem, SolverOptions, solve_erm


def report(num, desc, ok):
    print(f"criterion {num} ({desc}): {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} ({desc}) failed"


def test_criterion_1_solver_oracle_equivalence():
    rng = np.random.default_rng(1001)
    kernel = KernelSpec("gaussian", gamma=1.0)
    lam = 0.5
    sizes = [5, 50, 200]
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(20):
        n = sizes[i % 3]
        x = rng.normal(scale=2.0, size=(n, 1))
        y = rng.normal(size=n)
        problem = ErmProblem(Dataset(x, y), kernel, LossSpec("squared"), lam)
        sol = solve_erm(problem, opts=SolverOptions(method="pgd", tol=1e-10))
        g = gram_matrix(kernel, x)
        oracle = np.linalg.solve(g + 2.0 * lam * n * np.eye(n), y)
        d = sol.f.coeffs - oracle
        rel = np.sqrt(d @ g @ d) / np.sqrt(oracle @ g @ oracle)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    report(1, "solver-oracle equivalence", worst <= 1e-8 and elapsed < 1.0)


def test_criterion_2_derivative_correctness():
    rng = np.random.default_rng(1002)
    losses = [
        LossSpec("squared"),
        LossSpec("huber"),
        LossSpec("hinge"),
        LossSpec("logloss"),
        LossSpec("logloss", additive_logloss=False),
        LossSpec("pinball", nu=0.3),
    ]
    ok = True
    h1, h2 = 1e-6, 1e-4
    for spec in losses:
        count = 0
        while count < 1000:
            y = rng.choice([-1.0, 1.0]) if spec.kind == "hinge" else rng.normal()
            w = rng.normal(scale=2.0)
            if (
                is_nonsmooth_at(spec, y, w)
                or abs(w - y) < 1e-2
                or abs(1.0 - w * y) < 1e-2
                or abs(abs(w - y) - HUBER_DELTA) < 1e-2
            ):
                continue
            count += 1
            g = loss_grad(spec, y, w)
            fd = (loss_value(spec, y, w + h1) - loss_value(spec, y, w - h1)) / (2 * h1)
            if abs(fd - g) > 1e-6 * max(1.0, abs(g)):
                ok = False
            if spec.smoothness == "C0":
                continue
            hess = loss_hess(spec, y, w)
            fd2 = (
                loss_value(spec, y, w + h2) - 2 * loss_value(spec, y, w) + loss_value(spec, y, w - h2)
            ) / h2**2
            if abs(fd2 - hess) > 1e-5 * max(1.0, abs(hess)):
                ok = False
    report(2, "derivative correctness", ok)


def _lp_oracle(cost, w_mu, w_nu):
    m, n = cost.shape
    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        a_eq[m + j, j::n] = 1.0
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=np.concatenate([w_mu, w_nu]), method="highs")
    assert res.success
    return res.fun


def test_criterion_3_metric_exactness():
    rng = np.random.default_rng(1003)

    def rand_measure(k):
        atoms = rng.normal(scale=2.0, size=k)
        w = rng.uniform(0.1, 1.0, size=k)
        return EmpiricalMeasure(atoms, w / w.sum())

    ok = True
    for _ in range(50):
        mu = rand_measure(int(rng.integers(1, 9)))
        nu = rand_measure(int(rng.integers(1, 9)))
        cost = np.abs(mu.atoms[:, 0][:, None] - nu.atoms[:, 0][None, :])
        if abs(kantorovich_1d(mu, nu) - _lp_oracle(cost, mu.weights, nu.weights)) > 1e-9:
            ok = False
    for _ in range(20):
        n = int(rng.integers(2, 30))
        a, b = rng.normal(size=n), rng.normal(size=n)
        expected = np.mean(np.abs(np.sort(a) - np.sort(b)))
        if abs(kantorovich_1d(EmpiricalMeasure.uniform(a), EmpiricalMeasure.uniform(b)) - expected) > 1e-12:
            ok = False
    for _ in range(100):
        mu, nu, rho = rand_measure(5), rand_measure(6), rand_measure(4)
        dmn = kantorovich_1d(mu, nu)
        if dmn < 0 or abs(dmn - kantorovich_1d(nu, mu)) > 1e-12:
            ok = False
        if kantorovich_1d(mu, mu) > 1e-12:
            ok = False
        if dmn > kantorovich_1d(mu, rho) + kantorovich_1d(rho, nu) + 1e-10:
            ok = False
    report(3, "metric exactness", ok)


def test_criterion_4_influence_fd_consistency():
    rng = np.random.default_rng(1004)
    kernel = KernelSpec("gaussian", gamma=0.5)
    t0 = time.perf_counter()
    ok = True
    for _ in range(10):
        x = rng.normal(size=(50, 1))
        y = x[:, 0] ** 2 + 0.1 * rng.normal(size=50)
        problem = ErmProblem(Dataset(x, y), kernel, LossSpec("squared"), 0.1)
        sol = solve_erm(problem)
        z = np.array([rng.uniform(1.0, 3.0), rng.normal(scale=3.0)])
        rep = influence_function(problem, sol, z)
        errs = [fd_cross_check(problem, rep, z, t=t) for t in (1e-3, 1e-4, 1e-5)]
        if errs[1] > 1e-2 or errs[2] >= errs[1]:
            ok = False
        slope = np.polyfit(np.log([1e-3, 1e-4, 1e-5]), np.log(errs), 1)[0]
        if not 0.7 <= slope <= 1.3:
            ok = False
    elapsed = time.perf_counter() - t0
    report(4, "influence-function FD consistency", ok and elapsed < 30.0)


def test_criterion_5_all_data_reproduction():
    t0 = time.perf_counter()
    cfg = ExperimentConfig()  # documented defaults: n=100, m=500, lam=1e-3, p=0.9, beta=0.5
    res = run_all_data(cfg)
    j = list(res.probes).index(-1.0)
    vals = res.f_p_values[:, j]
    frac = float(np.mean((vals >= 0.85) & (vals <= 1.00)))
    rows = prefix_ratios(res, [300, 500])
    ok_path = True
    for probe in res.probes:
        r300 = next(r[4] for r in rows if r[0] == probe and r[1] == 300)
        r500 = next(r[4] for r in rows if r[0] == probe and r[1] == 500)
        if abs(r500 - r300) > 0.2 * abs(r300):
            ok_path = False
    elapsed = time.perf_counter() - t0
    report(5, "all-data law concentration and ratio path", frac >= 0.9 and ok_path and elapsed < 600)


def test_criterion_6_single_data_monotonicity():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(response="square_plus_noise")
    res = run_single_data(cfg)
    by_lam, by_x = {}, {}
    for r in res.rows:
        by_lam.setdefault(r.lam, []).append((r.x_tilde, r.if_norm))
        by_x.setdefault(r.x_tilde, []).append((r.lam, r.if_norm))
    mono_x = all(
        all(a[1] <= b[1] + 1e-12 for a, b in zip(sorted(v), sorted(v)[1:])) for v in by_lam.values()
    )
    mono_lam = all(
        all(a[1] > b[1] for a, b in zip(sorted(v), sorted(v)[1:])) for v in by_x.values()
    )
    elapsed = time.perf_counter() - t0
    report(6, "influence norm monotone in outlier and regularization", mono_x and mono_lam and elapsed < 300)


def test_criterion_7_robustness_band():
    ok = True
    ratios = {}
    for beta in (0.25, 0.5, 1.0, 2.0):
        cfg = ExperimentConfig(m=200, beta=beta)
        res = run_all_data(cfg)
        for j, probe in enumerate(res.probes):
            ratios.setdefault(probe, []).append(res.ratio()[j])
    for probe, vals in ratios.items():
        if max(vals) / min(vals) > 10.0:
            ok = False
    report(7, "ratio band across perturbation magnitudes", ok)


CONFIG_YAML = """
experiment:
  n: 40
  m: 20
  probes: [-1.0, 0.5]
  seed: 13
"""


def test_criterion_8_determinism(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(CONFIG_YAML)
    outs = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "3")):
        out = tmp_path / name
        r = subprocess.run(
            [
                sys.executable, "-m", "robustkern.cli", "all-data", str(cfg),
                "--out-dir", str(out), "--threads", threads,
            ],
            capture_output=True,
            text=True,
        )
        assert r.returncode == 0, r.stderr
        outs.append(out)
    ok = True
    for name in ("laws_-1.csv", "laws_0.5.csv", "ratios.csv"):
        blobs = [(o / name).read_bytes() for o in outs]
        if not (blobs[0] == blobs[1] == blobs[2]):
            ok = False
    sd = []
    for name in ("sa", "sb"):
        out = tmp_path / name
        r = subprocess.run(
            [
                sys.executable, "-m", "robustkern.cli", "single-data", str(cfg),
                "--out-dir", str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert r.returncode == 0, r.stderr
        sd.append((out / "influence.csv").read_bytes())
    if sd[0] != sd[1]:
        ok = False
    report(8, "byte-identical outputs across runs and thread counts", ok)
