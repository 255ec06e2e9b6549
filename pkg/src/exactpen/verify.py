"""Oracle and invariant checks across all modules, as one runnable suite."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import matrix_surrogates as ms
from . import oracles
from . import scalar_phi as sp
from . import vector_surrogates as vs
from .solver import DecompositionInstance, SolverOptions, apg_subproblem, gep_mscra


@dataclass
class CheckResult:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.name}: deviation {self.deviation:.3e} "
                f"(tol {self.tolerance:.1e}, {self.seconds:.2f}s){' ' + self.detail if self.detail else ''}")


def standard_phis():
    """The five reference generators: eps = q = 0.5 and a = 3.7."""
    return [sp.make_phi("Linear"), sp.make_phi("PowerQ", [0.5, 0.5]),
            sp.make_phi("Log", [0.5]), sp.make_phi("Arctan", [0.5]),
            sp.make_phi("Scad", [3.7])]


# ---------------------------------------------------------------------------
# individual checks: each returns (max deviation, tolerance, detail)
# ---------------------------------------------------------------------------

def check_conjugacy(n_samples=500, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for phi in standard_phis():
        s = rng.uniform(-3.0, 3.0 * phi.d_minus_1, n_samples)
        dev = np.abs(sp.psi_star(phi, s) - oracles.conjugate_by_search(phi, s))
        worst = max(worst, float(dev.max()))
    return worst, 1e-6, ""


def check_conjugate_monotone(n_samples=2000, seed=1):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for phi in standard_phis():
        s = np.sort(rng.uniform(-5.0, 5.0 * phi.d_minus_1, n_samples))
        worst = max(worst, float(np.max(-np.diff(sp.psi_star(phi, s)), initial=0.0)))
    return worst, 1e-12, ""


def check_penalty_identity(n_samples=500, seed=2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for phi in standard_phis():
        s = rng.uniform(0.0, 4.0 * phi.d_minus_1, n_samples)
        v = sp.scalar_penalty_value(phi, s)
        worst = max(worst, float(np.max(np.abs(v - (s - sp.psi_star(phi, s))))))
        sat = s > phi.d_minus_1 + 1e-9
        if np.any(v[sat] != 1.0):
            return math.inf, 1e-12, f"{phi.kind.value}: saturation not exact"
    return worst, 1e-12, ""


def check_penalty_bounds(n_samples=200, points=100001, seed=3):
    """Grid minimum vs closed form, plus the three-case lower bounds."""
    rng = np.random.default_rng(seed)
    grid = oracles.GridSpec(0.0, 1.0, points)
    worst = 0.0
    for phi in standard_phis():
        s_all = np.concatenate([rng.uniform(0.0, 2.0 * phi.d_minus_1, n_samples - 3),
                                [0.0, phi.saturation, phi.d_minus_1]])
        for s in s_all:
            closed = sp.scalar_penalty_value(phi, s)
            worst = max(worst, abs(oracles.scalar_min_by_grid(phi, s, grid) - closed))
            case, bound = sp.penalty_value_bounds(phi, s)
            if case == 1 and closed != 1.0:
                return math.inf, 1e-4, f"{phi.kind.value}: case-1 value {closed} != 1"
            if closed < bound - 1e-12:
                return math.inf, 1e-4, f"{phi.kind.value}: case-{case} bound violated at s={s}"
    return worst, 1e-4, ""


def check_t_zero(seed=4):
    worst = 0.0
    for phi in standard_phis():
        worst = max(worst, abs(sp.compute_t_zero(phi) - sp.t_zero_by_bisection(phi)))
    return worst, 1e-9, ""


def scad_penalty_reference(x, lam, a):
    """The SCAD penalty in its usual three-piece form."""
    z = np.abs(x)
    return np.where(z <= lam, lam * z,
                    np.where(z <= a * lam, (2 * a * lam * z - z * z - lam * lam) / (2 * (a - 1)),
                             0.5 * (a + 1) * lam * lam))


def check_scad_identity(n_samples=1000, seed=5):
    """Singleton-group surrogate with Scad phi equals a rescaled SCAD penalty.

    With ``c = (a + 1) / 2`` and ``lam = 1 / (c rho)`` the surrogate term is
    ``c rho^2 * SCAD_lam(|x|)``.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for a in (3.7, 2.5):
        phi = sp.make_phi("Scad", [a])
        c = 0.5 * (a + 1.0)
        for rho in (0.5, 1.0, 3.0):
            lam = 1.0 / (c * rho)
            x = rng.uniform(-1.5 * a * lam, 1.5 * a * lam, size=(n_samples // 6 + 1, 4))
            part = vs.GroupPartition.singletons(4)
            ours = vs.batched_surrogate_penalty(x, part, phi, rho)
            ref = c * rho * rho * scad_penalty_reference(x, lam, a).sum(axis=1)
            worst = max(worst, float(np.max(np.abs(ours - ref))))
    return worst, 1e-10, ""


def check_prox_oracles(n_cases=200, points=100001, seed=6):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases // 2):
        # spectral kernel on a diagonal matrix reduces to scalar proxes
        d = rng.uniform(0.0, 4.0, 3)
        tau, g1 = rng.uniform(0.0, 2.0), rng.uniform(0.2, 3.0)
        Z = ms.prox_nuclear_spectral_box(np.diag(d), tau, g1)
        grid = oracles.GridSpec(-g1, g1, points)
        ref = [oracles.prox_by_grid(tau, di, g1, grid) for di in d]
        worst = max(worst, float(np.max(np.abs(np.diag(Z) - ref))))
        # entrywise kernel
        y, w, g2 = rng.uniform(-4.0, 4.0), rng.uniform(0.0, 2.0), rng.uniform(0.2, 3.0)
        z = float(ms.prox_weighted_l1_box(np.array([[y]]), np.array([[w]]), g2)[0, 0])
        grid = oracles.GridSpec(-g2, g2, points)
        worst = max(worst, abs(z - oracles.prox_by_grid(w, y, g2, grid)))
    return worst, 2e-4, ""


def check_prox_nonexpansive(n_cases=50, seed=7):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        A, B = rng.normal(size=(2, 6, 9))
        tau, g = rng.uniform(0, 1), rng.uniform(0.5, 3)
        W = rng.uniform(0, 1, size=(6, 9))
        for f in (lambda Z: ms.prox_nuclear_spectral_box(Z, tau, g),
                  lambda Z: ms.prox_weighted_l1_box(Z, W, g)):
            excess = np.linalg.norm(f(A) - f(B)) - np.linalg.norm(A - B)
            worst = max(worst, float(excess))
    return max(worst, 0.0), 1e-10, ""


def check_attainment(n_cases=50, seed=8):
    rng = np.random.default_rng(seed)
    worst = 0.0
    phis = standard_phis()
    for i in range(n_cases):
        phi = phis[i % len(phis)]
        n1 = int(rng.integers(1, 21))
        n2 = int(rng.integers(n1, 31))
        X = rng.normal(size=(n1, n2)) * rng.uniform(0.1, 3.0)
        rho = rng.uniform(0.2, 3.0)
        W = ms.subgrad_spectral(X, phi, rho)
        S = ms.subgrad_entrywise(X, phi, rho)
        worst = max(worst, abs(ms.spectral_attainment_gap(X, W, phi, rho)),
                    abs(ms.entrywise_attainment_gap(X, S, phi, rho)))
    return worst, 1e-8, ""


def check_rank_surrogate_exact(n_cases=30, seed=9):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for phi in standard_phis():
        for _ in range(n_cases // 5):
            r = int(rng.integers(0, 5))
            U, _ = np.linalg.qr(rng.normal(size=(6, 6)))
            V, _ = np.linalg.qr(rng.normal(size=(8, 8)))
            s = np.zeros(6)
            s[:r] = rng.uniform(1.0, 3.0, r)
            X = U @ np.diag(s) @ V[:6]
            rho = phi.d_minus_1 * (1 + 1e-3) / 1.0
            worst = max(worst, abs(ms.rank_surrogate(X, phi, rho) - r))
    return worst, 1e-10, ""


def check_solver_small(seed=10):
    """Zero data, the 1x1 reduction and a feasibility/certificate run."""
    res = apg_subproblem(np.array([[2.0]]), np.zeros((1, 1)), np.zeros((1, 1)), 1.0, 1.0,
                         100.0, 100.0)
    dev = abs(res.objective - 1.5)
    rep = gep_mscra(DecompositionInstance(np.zeros((4, 5)), 1.0, 1.0))
    if rep.outer_iters > 2 or np.any(rep.X_hat) or np.any(rep.Y_hat):
        return math.inf, 1e-6, "zero data not solved by (0, 0)"
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(12, 15)) * 3
    rep = gep_mscra(DecompositionInstance(M, 5.0, 2.0), opts=SolverOptions())
    if not rep.certificates_ok:
        return math.inf, 1e-6, f"certificates failed: {rep.flags}"
    return dev, 1e-6, ""


def equivalence_instances(count: int, seed: int = 11, nu: float = 0.1, min_gap: float = 0.05):
    """Random 2-variable instances of ``nu/2 ||Ax - b||^2 + ||x||_0`` with a clear winner.

    Each item is ``(A, b, box, x_opt, support)``; ``box`` contains every
    restricted least-squares solution, so the box constraint is inactive for
    the enumeration oracle.
    """
    rng = np.random.default_rng(seed)
    part = vs.GroupPartition.singletons(2)
    out = []
    while len(out) < count:
        A = rng.normal(size=(3, 2))
        x_true = rng.choice([0.0, 1.0], size=2) * rng.uniform(2.0, 8.0, 2) * rng.choice([-1, 1], 2)
        b = A @ x_true + 0.3 * rng.normal(size=3)
        x_opt, support, best, runner = oracles.brute_force_regularized_min(A, b, nu, part)
        if runner - best < min_gap:
            continue
        sols = [oracles._restricted_lstsq(A, b, cols) for _, cols in oracles._supports(part)]
        box = 1.2 * max(float(np.max(np.abs(x))) for x in sols) + 0.5
        out.append((A, b, box, x_opt, support))
    return out


def lipschitz_on_box(A, b, box):
    """Exact Lipschitz constant of 1/2 ||Ax - b||^2 on ``[-box, box]^n``.

    The gradient norm is convex, so its maximum sits at a vertex.
    """
    n = A.shape[1]
    best = 0.0
    for signs in np.array(np.meshgrid(*[[-1.0, 1.0]] * n)).T.reshape(-1, n):
        best = max(best, float(np.linalg.norm(A.T @ (A @ (box * signs) - b))))
    return best


def equivalence_case(A, b, box, phi, nu=0.1, points=2001, factor=2.0):
    """Support of the grid minimizer of the surrogate objective, with rho = factor * threshold."""
    part = vs.GroupPartition.singletons(2)
    L_f = lipschitz_on_box(A, b, box)
    rho = factor * vs.threshold_regularized_variant(phi, nu, L_f, part)

    def objective(P):
        R = P @ A.T - b
        return nu * 0.5 * np.sum(R * R, axis=1) + vs.batched_surrogate_penalty(P, part, phi, rho)

    x, _ = oracles.brute_force_surrogate_min(objective, oracles.GridSpec(-box, box, points), 2)
    active = tuple(i for i, v in enumerate(np.abs(x)) if v > 1e-8)
    return active, rho


def check_equivalence(count=20, seed=11):
    phi = sp.make_phi("Scad")
    mismatches = 0
    for A, b, box, _, support in equivalence_instances(count, seed):
        active, _ = equivalence_case(A, b, box, phi)
        mismatches += int(active != tuple(support))
    return float(mismatches), 0.0, f"{count - mismatches}/{count} supports match"


FAST_CHECKS = [
    ("conjugacy", check_conjugacy),
    ("conjugate_monotone", check_conjugate_monotone),
    ("penalty_identity", check_penalty_identity),
    ("penalty_bounds", check_penalty_bounds),
    ("t_zero_bisection", check_t_zero),
    ("scad_identity", check_scad_identity),
    ("prox_oracles", check_prox_oracles),
    ("prox_nonexpansive", check_prox_nonexpansive),
    ("subgradient_attainment", check_attainment),
    ("rank_surrogate_exact", check_rank_surrogate_exact),
    ("solver_small", check_solver_small),
]
FULL_CHECKS = FAST_CHECKS + [("global_minimizer_equivalence", check_equivalence)]


def verify_suite(level: str = "fast", log: Callable = None) -> list:
    """Run every check for ``level`` ('fast' or 'full').

    Exceptions inside a check are reported as failures, never raised.
    """
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    results = []
    for name, fn in (FAST_CHECKS if level == "fast" else FULL_CHECKS):
        t0 = time.perf_counter()
        try:
            dev, tol, detail = fn()
            passed = dev <= tol
        except Exception as exc:
            dev, tol, detail, passed = math.inf, 0.0, f"{type(exc).__name__}: {exc}", False
        res = CheckResult(name, passed, dev, tol, time.perf_counter() - t0, detail)
        results.append(res)
        if log:
            log(res.line())
    return results
