"""Acceptance criteria 1-10, one test each, with pinned tolerances and runtime budgets.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from exactpen import matrix_surrogates as ms
from exactpen.experiments import ExperimentConfig, run_trial
from exactpen.oracles import GridSpec, conjugate_by_search, prox_by_grid, scalar_min_by_grid
from exactpen.scalar_phi import penalty_value_bounds, make_phi, psi_star, scalar_penalty_value
from exactpen.vector_surrogates import GroupPartition, surrogate_penalty_term
from exactpen.verify import (equivalence_case, equivalence_instances, scad_penalty_reference,
                             standard_phis)

CONJ_TOL = 1e-6
PENALTY_TOL = 1e-4
SCAD_TOL = 1e-10
PROX_TOL = 2e-4
ATTAIN_TOL = 1e-8
RMS_TOL_7 = 5e-3
FEAS_TOL = 1e-8


def record(number, title, ok, detail, seconds):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {title}: {detail} ({seconds:.1f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# solver runs shared by criteria 7-10
# ---------------------------------------------------------------------------

_RUNS = {}


def solver_runs(key):
    """Run (once per session) the trials for one experiment setting."""
    if key not in _RUNS:
        kind, params = key[0], dict(key[1:])
        cfg = ExperimentConfig(**params)
        t0 = time.perf_counter()
        out = [run_trial(cfg, t, return_report=True) for t in range(cfg.trials)]
        _RUNS[key] = (out, time.perf_counter() - t0)
    return _RUNS[key]


def _key(tag, **kw):
    return (tag,) + tuple(sorted(kw.items()))


NEAR_NOISELESS = _key("c7", n=50, r=2, rho_s=0.05, sigma=0.01, trials=5, seed=7)
FIG1 = [_key("c8", n=n, r=n // 10, rho_s=0.1, sigma=0.1, trials=10, seed=2024) for n in (100, 200, 400)]
FIG2 = [_key("c9", n=100, r=10, rho_s=p, sigma=0.2, trials=10, seed=2025) for p in (0.05, 0.1, 0.2)]


def _mean(records, attr):
    return float(np.mean([getattr(r, attr) for r, _ in records]))


# ---------------------------------------------------------------------------


def test_criterion_01_conjugacy():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for phi in standard_phis():
        s = rng.uniform(-3.0, 3.0 * phi.d_minus_1, 500)
        worst = max(worst, float(np.max(np.abs(psi_star(phi, s) - conjugate_by_search(phi, s)))))
    dt = time.perf_counter() - t0
    record(1, "conjugacy", worst <= CONJ_TOL and dt < 5.0,
           f"max |psi* - search| = {worst:.2e} <= {CONJ_TOL:.0e}", dt)


def test_criterion_02_penalty_calculus():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    grid = GridSpec(0.0, 1.0, 100001)
    worst, violations = 0.0, 0
    for phi in standard_phis():
        for s in rng.uniform(0.0, 2.0 * phi.d_minus_1, 200):
            closed = s - psi_star(phi, s)
            worst = max(worst, abs(scalar_min_by_grid(phi, s, grid) - closed))
            case, bound = penalty_value_bounds(phi, s)
            value = scalar_penalty_value(phi, s)
            violations += int(value < bound - 1e-12)
            violations += int(case == 1 and value != 1.0)
    dt = time.perf_counter() - t0
    record(2, "scalar penalty calculus", worst <= PENALTY_TOL and violations == 0 and dt < 10.0,
           f"max grid deviation {worst:.2e} <= {PENALTY_TOL:.0e}, {violations} bound violations", dt)


def test_criterion_03_scad_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    a = 3.7
    phi = make_phi("Scad", [a])
    c = 0.5 * (a + 1)
    part = GroupPartition.singletons(1)
    worst = 0.0
    for _ in range(1000):
        rho = rng.uniform(0.2, 5.0)
        lam = 1.0 / (c * rho)
        x = rng.uniform(-1.5 * a * lam, 1.5 * a * lam, 1)
        ours = surrogate_penalty_term(x, part, phi, rho)
        ref = c * rho * rho * float(scad_penalty_reference(x, lam, a)[0])
        worst = max(worst, abs(ours - ref))
    dt = time.perf_counter() - t0
    record(3, "SCAD identity", worst <= SCAD_TOL, f"max deviation {worst:.2e} <= {SCAD_TOL:.0e}", dt)


def test_criterion_04_prox_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    worst = 0.0
    for case in range(200):
        g = rng.uniform(0.2, 3.0)
        w = rng.uniform(0.0, 2.0)
        grid = GridSpec(-g, g, 100001)
        if case % 2 == 0:
            d = rng.uniform(0.0, 4.0, 2)
            ours = np.diag(ms.prox_nuclear_spectral_box(np.diag(d), w, g))
            ref = [prox_by_grid(w, di, g, grid) for di in d]
        else:
            y = rng.uniform(-4.0, 4.0, 2)
            ours = ms.prox_weighted_l1_box(y[None, :], np.full((1, 2), w), g)[0]
            ref = [prox_by_grid(w, yi, g, grid) for yi in y]
        worst = max(worst, float(np.max(np.abs(np.asarray(ours) - ref))))
    dt = time.perf_counter() - t0
    record(4, "prox oracles", worst <= PROX_TOL and dt < 10.0,
           f"max component deviation {worst:.2e} <= {PROX_TOL:.0e}", dt)


def test_criterion_05_subgradient_attainment():
    t0 = time.perf_counter()
    rng = np.random.default_rng(105)
    phis = standard_phis()
    worst = 0.0
    for i in range(50):
        phi = phis[i % 5]
        n1 = int(rng.integers(1, 21))
        n2 = int(rng.integers(1, 31))
        X = rng.normal(size=(n1, n2)) * rng.uniform(0.1, 3.0)
        rho = rng.uniform(0.2, 3.0)
        worst = max(worst,
                    abs(ms.spectral_attainment_gap(X, ms.subgrad_spectral(X, phi, rho), phi, rho)),
                    abs(ms.entrywise_attainment_gap(X, ms.subgrad_entrywise(X, phi, rho), phi, rho)))
    dt = time.perf_counter() - t0
    record(5, "subgradient attainment", worst <= ATTAIN_TOL,
           f"max gap {worst:.2e} <= {ATTAIN_TOL:.0e}", dt)


def test_criterion_06_exact_penalty_equivalence():
    t0 = time.perf_counter()
    phi = make_phi("Scad")
    matches = 0
    for A, b, box, _, support in equivalence_instances(20, seed=106, nu=0.1):
        active, _ = equivalence_case(A, b, box, phi, nu=0.1, factor=2.0)
        matches += int(active == tuple(support))
    dt = time.perf_counter() - t0
    record(6, "exact-penalty equivalence", matches == 20 and dt < 60.0,
           f"{matches}/20 supports match", dt)


def test_criterion_07_near_noiseless_recovery():
    runs, dt = solver_runs(NEAR_NOISELESS)
    ranks = [r.rank_hat for r, _ in runs]
    rms = [r.rms_x for r, _ in runs]
    n_rank = sum(k == 2 for k in ranks)
    n_rms = sum(v <= RMS_TOL_7 for v in rms)
    record(7, "near-noiseless recovery", n_rank >= 4 and n_rms >= 4 and dt < 60.0,
           f"rank==2 in {n_rank}/5 (ranks {ranks}), rms_x<={RMS_TOL_7:.0e} in {n_rms}/5 "
           f"(max rms_x {max(rms):.3g})", dt)


def test_criterion_08_size_trend():
    out = [solver_runs(k) for k in FIG1]
    dt = sum(t for _, t in out)
    ns = (100, 200, 400)
    rx = [_mean(r, "rms_x") for r, _ in out]
    ry = [_mean(r, "rms_y") for r, _ in out]
    rk = [_mean(r, "rank_hat") for r, _ in out]
    dec = all(a > b for a, b in zip(rx, rx[1:])) and all(a > b for a, b in zip(ry, ry[1:]))
    ranks_ok = all(abs(k - 0.1 * n) <= 1 for k, n in zip(rk, ns))
    record(8, "size trend", dec and ranks_ok and dt < 900.0,
           f"rms_x {['%.4f' % v for v in rx]}, rms_y {['%.4f' % v for v in ry]}, "
           f"mean rank {rk}", dt)


def test_criterion_09_sparsity_trend():
    out = [solver_runs(k) for k in FIG2]
    dt = sum(t for _, t in out)
    rx = [_mean(r, "rms_x") for r, _ in out]
    ry = [_mean(r, "rms_y") for r, _ in out]
    ok = all(a <= b for a, b in zip(rx, rx[1:])) and all(a <= b for a, b in zip(ry, ry[1:]))
    record(9, "sparsity trend", ok and dt < 600.0,
           f"rms_x {['%.4f' % v for v in rx]}, rms_y {['%.4f' % v for v in ry]}", dt)


def test_criterion_10_solver_certificates():
    t0 = time.perf_counter()
    reports = [rep for key in [NEAR_NOISELESS] + FIG1 + FIG2 for _, rep in solver_runs(key)[0]]
    bad = [i for i, rep in enumerate(reports)
           if rep is None or rep.feasibility_violation > FEAS_TOL or rep.inner_max_iter_hits > 0]
    worst = max(rep.feasibility_violation for rep in reports if rep is not None)
    record(10, "solver certificates", not bad,
           f"{len(reports) - len(bad)}/{len(reports)} runs certified, "
           f"max feasibility violation {worst:.1e}", time.perf_counter() - t0)
