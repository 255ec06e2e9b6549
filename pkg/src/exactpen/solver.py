"""Multi-stage convex relaxation for low-rank plus sparse decomposition.

Problem::

    min  nu/2 ||X + Y - M||_F^2 + rank(X) + lam ||Y||_0
    s.t. ||X|| <= gamma1,  ||Y||_inf <= gamma2

Each stage solves the convex subproblem

    min  1/2 ||X + Y - M||_F^2 + lam_k (||X||_* - <W, X>) + mu_k <E - S, |Y|>

by accelerated proximal gradient, then refreshes ``W`` and ``S`` from
subgradients of psi* at the new iterate.
"""
from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, MaxIterReached
from .matrix_surrogates import (as_wide, prox_nuclear_spectral_box, prox_weighted_l1_box,
                                singular_values, subgrad_entrywise, subgrad_spectral)
from .scalar_phi import PhiSpec, make_phi

logger = logging.getLogger(__name__)

RHO_FLOOR = 1e-8


@dataclass(frozen=True)
class DecompositionInstance:
    M: np.ndarray
    gamma1: float
    gamma2: float
    lam: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.ndim != 2 or not np.all(np.isfinite(M)):
            raise DomainError("M must be a finite 2-d array")
        object.__setattr__(self, "M", M)
        for name in ("gamma1", "gamma2", "lam", "nu"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


@dataclass
class Schedule:
    """Parameter sequences for the outer loop.

    ``lambda_k`` is ``lambda1`` at stage 1 and ``lambda_mult * lambda1``
    afterwards, with ``lambda_mult = min(max(20, 0.45 n / 8), 100)``.  ``mu_k``
    is ``tau_k lambda_k / sqrt(n)`` with ``tau_1 = mu1_coef``.
    """

    n: int
    lambda1: float = 1.0
    mu1_coef: float = 0.5
    tau2: float = 0.8
    tau_rest: float = 0.35
    rho_coef: float = 10.0
    rho_tilde_coef: float = 10.0 / 9.0
    rho_tilde_growth: float = 10.0 / 9.0
    stop_tol: float = 0.02
    rank_stable_window: int = 3
    rank_rel_tol: float = 1e-6
    max_outer: int = 50

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be at least 1")
        for name in ("lambda1", "mu1_coef", "tau2", "tau_rest", "rho_coef",
                     "rho_tilde_coef", "rho_tilde_growth", "stop_tol", "rank_rel_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.rank_stable_window < 1 or self.max_outer < 1:
            raise DomainError("rank_stable_window and max_outer must be positive")

    @property
    def lambda_mult(self) -> float:
        return min(max(20.0, 0.45 * self.n / 8.0), 100.0)

    def tau(self, k: int) -> float:
        if k == 1:
            return self.mu1_coef
        return self.tau2 if k == 2 else self.tau_rest

    def lambda_k(self, k: int) -> float:
        return self.lambda1 if k == 1 else self.lambda_mult * self.lambda1

    def mu_k(self, k: int) -> float:
        return self.tau(k) * self.lambda_k(k) / math.sqrt(self.n)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict, n: Optional[int] = None) -> "Schedule":
        obj = dict(obj)
        if n is not None:
            obj.setdefault("n", n)
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown schedule fields {sorted(unknown)}")
        return cls(**obj)


def default_schedule(n: int) -> Schedule:
    return Schedule(n=n)


@dataclass
class SolverOptions:
    inner_tol: float = 1e-6
    inner_max_iter: int = 500
    restart: bool = True
    warm_start: bool = True


@dataclass
class InnerResult:
    X: np.ndarray
    Y: np.ndarray
    iterations: int
    converged: bool
    fixed_point_residual: float  # relative: ||z - T(z)|| / (1 + ||z||)
    objective: float


@dataclass
class SolverReport:
    X_hat: np.ndarray
    Y_hat: np.ndarray
    outer_iters: int
    inner_iters_total: int
    final_rank: int
    final_sparsity: int
    residual_history: list
    rank_history: list
    sparsity_history: list
    rho_history: list
    rho_tilde_history: list
    inner_residual_history: list
    wall_time_seconds: float
    max_iter_reached: bool = False
    inner_max_iter_hits: int = 0
    degenerate_rho: bool = False
    feasibility_violation: float = 0.0
    flags: list = field(default_factory=list)

    @property
    def certificates_ok(self) -> bool:
        return self.feasibility_violation <= 1e-8 and self.inner_max_iter_hits == 0

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("X_hat", "Y_hat")}
        out["shape"] = list(self.X_hat.shape)
        out["certificates_ok"] = self.certificates_ok
        return out


def numerical_rank(X, rel_tol: float = 1e-6) -> int:
    """Number of singular values at least ``rel_tol * ||X||``."""
    s = singular_values(X)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s >= rel_tol * s[0]))


def subproblem_objective(X, Y, M, W, S, lam_k, mu_k) -> float:
    R = X + Y - M
    nuc = float(np.sum(singular_values(X)))
    return (0.5 * float(np.sum(R * R)) + lam_k * (nuc - float(np.sum(W * X)))
            + mu_k * float(np.sum((1.0 - S) * np.abs(Y))))


def _prox_step(X, Y, M, W, y_weights, lam_k, gamma1, gamma2, L=2.0):
    R = X + Y - M
    Xn = prox_nuclear_spectral_box(X - (R - lam_k * W) / L, lam_k / L, gamma1)
    Yn = prox_weighted_l1_box(Y - R / L, y_weights / L, gamma2)
    return Xn, Yn


def apg_subproblem(M, W_prev, S_prev, lam_k, mu_k, gamma1, gamma2,
                   opts: Optional[SolverOptions] = None, X0=None, Y0=None) -> InnerResult:
    """Accelerated proximal gradient on one convex stage.

    The smooth part ``1/2 ||X + Y - M||^2 - lam_k <W, X>`` has a gradient with
    Lipschitz constant 2, so the step is fixed at 1/2.  Stops once the relative
    iterate change drops below ``opts.inner_tol`` and the prox-gradient
    fixed-point residual at the candidate passes the same bound.

    Raises
    ------
    DomainError
        If the Y-weights ``mu_k (1 - S_prev)`` are negative somewhere.
    """
    opts = opts or SolverOptions()
    M = np.asarray(M, dtype=float)
    W_prev = np.asarray(W_prev, dtype=float)
    S_prev = np.asarray(S_prev, dtype=float)
    if lam_k < 0 or mu_k < 0:
        raise DomainError("lam_k and mu_k must be nonnegative")
    y_weights = mu_k * (1.0 - S_prev)
    if np.any(y_weights < -1e-12):
        raise DomainError("Y-block weights mu_k (1 - S) must be nonnegative")
    y_weights = np.maximum(y_weights, 0.0)

    X = np.zeros_like(M) if X0 is None else np.array(X0, dtype=float)
    Y = np.zeros_like(M) if Y0 is None else np.array(Y0, dtype=float)
    Xe, Ye = X, Y
    t = 1.0
    tol = opts.inner_tol
    converged = False
    residual = math.inf
    it = 0
    for it in range(1, opts.inner_max_iter + 1):
        Xn, Yn = _prox_step(Xe, Ye, M, W_prev, y_weights, lam_k, gamma1, gamma2)
        dX, dY = Xn - X, Yn - Y
        scale = 1.0 + math.sqrt(float(np.sum(Xn * Xn) + np.sum(Yn * Yn)))
        change = math.sqrt(float(np.sum(dX * dX) + np.sum(dY * dY))) / scale

        if change <= tol:
            Xc, Yc = _prox_step(Xn, Yn, M, W_prev, y_weights, lam_k, gamma1, gamma2)
            residual = math.sqrt(float(np.sum((Xc - Xn) ** 2) + np.sum((Yc - Yn) ** 2))) / scale
            if residual <= tol:
                X, Y = Xn, Yn
                converged = True
                break

        # gradient-based adaptive restart
        if opts.restart and (float(np.sum((Xe - Xn) * dX) + np.sum((Ye - Yn) * dY)) > 0.0):
            t = 1.0
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_next
        Xe, Ye = Xn + beta * dX, Yn + beta * dY
        X, Y, t = Xn, Yn, t_next

    if not converged:
        Xc, Yc = _prox_step(X, Y, M, W_prev, y_weights, lam_k, gamma1, gamma2)
        scale = 1.0 + math.sqrt(float(np.sum(X * X) + np.sum(Y * Y)))
        residual = math.sqrt(float(np.sum((Xc - X) ** 2) + np.sum((Yc - Y) ** 2))) / scale
        warnings.warn(f"APG stopped after {it} iterations (residual {residual:.2e})",
                      MaxIterReached, stacklevel=2)

    obj = subproblem_objective(X, Y, M, W_prev, S_prev, lam_k, mu_k)
    return InnerResult(X, Y, it, converged, residual, obj)


def gep_mscra(instance: DecompositionInstance, phi: Optional[PhiSpec] = None,
              schedule: Optional[Schedule] = None,
              opts: Optional[SolverOptions] = None) -> SolverReport:
    """Run the multi-stage relaxation on ``instance``.

    Stops when the squared residual changes by at most ``stop_tol * ||M||_F``
    between stages and the numerical rank has been constant over the last
    ``rank_stable_window`` transitions, or after ``schedule.max_outer`` stages.
    """
    start = time.perf_counter()
    phi = phi or make_phi("Scad")
    opts = opts or SolverOptions()
    M, flipped = as_wide(instance.M)
    schedule = schedule or default_schedule(max(M.shape))
    g1, g2 = instance.gamma1, instance.gamma2
    m_norm = float(np.linalg.norm(M))

    X = np.zeros_like(M)
    Y = np.zeros_like(M)
    W = subgrad_spectral(X, phi, 1.0)
    S = subgrad_entrywise(Y, phi, 1.0)

    residual_hist = [m_norm ** 2]
    rank_hist = [0]
    sparsity_hist = [0]
    rho_hist, rho_t_hist, inner_res_hist = [], [], []
    inner_total = inner_hits = 0
    violation = 0.0
    degenerate = False
    flags = []
    rho = rho_t = None
    stopped = False
    k = 0

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterReached)
        for k in range(1, schedule.max_outer + 1):
            lam_k, mu_k = schedule.lambda_k(k), schedule.mu_k(k)
            X0, Y0 = (X, Y) if opts.warm_start else (None, None)
            res = apg_subproblem(M, W, S, lam_k, mu_k, g1, g2, opts, X0=X0, Y0=Y0)
            X, Y = res.X, res.Y
            inner_total += res.iterations
            inner_hits += int(not res.converged)
            inner_res_hist.append(res.fixed_point_residual)

            if k == 1:
                xn = float(singular_values(X)[0]) if X.size else 0.0
                yn = float(np.max(np.abs(Y))) if Y.size else 0.0
                if xn <= RHO_FLOOR or yn <= RHO_FLOOR:
                    degenerate = True
                    flags.append("degenerate_rho")
                rho = schedule.rho_coef / max(xn, RHO_FLOOR)
                rho_t = schedule.rho_tilde_coef / max(yn, RHO_FLOOR)
            else:
                rho_t = schedule.rho_tilde_growth * rho_t
            rho_hist.append(rho)
            rho_t_hist.append(rho_t)

            W = subgrad_spectral(X, phi, rho)
            S = subgrad_entrywise(Y, phi, rho_t)

            violation = max(violation,
                            float(singular_values(X)[0]) - g1 if X.size else 0.0,
                            float(np.max(np.abs(Y))) - g2 if Y.size else 0.0,
                            float(singular_values(W)[0]) - 1.0 if W.size else 0.0,
                            float(np.max(np.abs(S))) - 1.0 if S.size else 0.0)

            R = X + Y - M
            residual_hist.append(float(np.sum(R * R)))
            rank_hist.append(numerical_rank(X, schedule.rank_rel_tol))
            sparsity_hist.append(int(np.count_nonzero(Y)))
            logger.debug("stage %d: rank %d, nnz %d, residual %.4e, inner %d",
                         k, rank_hist[-1], sparsity_hist[-1], residual_hist[-1], res.iterations)

            if m_norm == 0.0:
                # zero data: (0, 0) solves every stage exactly
                stopped = True
                break
            w = schedule.rank_stable_window
            if (abs(residual_hist[-1] - residual_hist[-2]) <= schedule.stop_tol * m_norm
                    and len(rank_hist) >= w + 1
                    and len(set(rank_hist[-(w + 1):])) == 1):
                stopped = True
                break

    if not stopped:
        flags.append("max_outer_reached")
        warnings.warn(f"outer loop hit max_outer={schedule.max_outer}", MaxIterReached,
                      stacklevel=2)
    if inner_hits:
        flags.append("inner_max_iter")

    if flipped:
        X, Y = X.T, Y.T
    return SolverReport(
        X_hat=X, Y_hat=Y, outer_iters=k, inner_iters_total=inner_total,
        final_rank=rank_hist[-1], final_sparsity=sparsity_hist[-1],
        residual_history=residual_hist[1:], rank_history=rank_hist[1:],
        sparsity_history=sparsity_hist[1:], rho_history=rho_hist,
        rho_tilde_history=rho_t_hist, inner_residual_history=inner_res_hist,
        wall_time_seconds=time.perf_counter() - start, max_iter_reached=not stopped,
        inner_max_iter_hits=inner_hits, degenerate_rho=degenerate,
        feasibility_violation=max(violation, 0.0), flags=flags)
