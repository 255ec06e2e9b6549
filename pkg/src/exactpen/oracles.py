"""Brute-force reference computations.

Everything here is deliberately naive (ternary search, dense grids,
exhaustive enumeration) and shares no code path with the closed forms it is
used to check.  Only the generator value ``phi(t)`` itself is borrowed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError, Infeasible, InvalidParameter
from .scalar_phi import PhiSpec, phi_eval

MAX_GROUPS = 12
MAX_GRID_DIM = 3
RIDGE = 1e-12


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    points: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidParameter("grid needs lo < hi")
        if self.points < 2:
            raise InvalidParameter("grid needs at least 2 points")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.points - 1)

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


def conjugate_by_search(phi: PhiSpec, s, tol: float = 1e-12):
    """``sup_{t in [0,1]} { s t - phi(t) }`` by ternary search on the concave objective.

    ``s`` may be an array; all searches then run side by side.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    s = np.asarray(s, dtype=float)
    lo = np.zeros_like(s)
    hi = np.ones_like(s)

    def g(t):
        return s * t - phi_eval(phi, t)

    while np.max(hi - lo, initial=0.0) > tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        left = g(m1) < g(m2)
        lo = np.where(left, m1, lo)
        hi = np.where(left, hi, m2)
    best = np.maximum(g(0.5 * (lo + hi)), np.maximum(g(np.zeros_like(s)), g(np.ones_like(s))))
    return float(best) if best.ndim == 0 else best


def scalar_min_by_grid(phi: PhiSpec, rho_omega: float,
                       grid: GridSpec = GridSpec(0.0, 1.0, 100001)) -> float:
    """Grid minimum over [0, 1] of ``phi(t) + rho_omega (1 - t)``."""
    if grid.lo > 0.0 or grid.hi < 1.0:
        raise DomainError("grid must cover [0, 1]")
    t = grid.values()
    t = t[(t >= 0.0) & (t <= 1.0)]
    return float(np.min(phi_eval(phi, t) + rho_omega * (1.0 - t)))


def prox_by_grid(weight: float, y: float, box: float,
                 grid: Optional[GridSpec] = None) -> float:
    """Grid argmin over ``[-box, box]`` of ``1/2 (x - y)^2 + weight |x|``."""
    if weight < 0 or not box > 0:
        raise DomainError("need weight >= 0 and box > 0")
    grid = grid or GridSpec(-box, box, 100001)
    x = grid.values()
    x = x[np.abs(x) <= box * (1 + 1e-15)]
    obj = 0.5 * (x - y) ** 2 + weight * np.abs(x)
    return float(x[np.argmin(obj)])


def _loss(residual: np.ndarray, kind: str) -> float:
    if kind == "half_sq":
        return 0.5 * float(residual @ residual)
    if kind == "norm":
        return float(np.linalg.norm(residual))
    raise InvalidParameter(f"unknown loss {kind!r}")


def _restricted_lstsq(A: np.ndarray, b: np.ndarray, cols: Sequence[int]) -> np.ndarray:
    x = np.zeros(A.shape[1])
    if cols:
        As = A[:, cols]
        G = As.T @ As + RIDGE * np.eye(len(cols))
        x[list(cols)] = np.linalg.solve(G, As.T @ b)
    return x


def _supports(partition):
    m = partition.m
    if m > MAX_GROUPS:
        raise InvalidParameter(f"enumeration is capped at {MAX_GROUPS} groups")
    for size in range(m + 1):
        for active in itertools.combinations(range(m), size):
            cols = sorted(j for i in active for j in partition.groups[i])
            yield active, cols


def brute_force_support_min(A, b, delta: float, partition, loss: str = "half_sq"):
    """Fewest active groups with least-squares loss at most ``delta``.

    Returns ``(support, count)`` where ``support`` is a tuple of group
    indices.  Supports are enumerated by increasing size, so the first
    feasible one is optimal.

    Raises
    ------
    Infeasible
        If even the full support misses ``delta``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape != (b.shape[0], partition.n):
        raise DimensionMismatch("A must be (len(b), n)")
    slack = 1e-12 * max(1.0, delta)
    for active, cols in _supports(partition):
        x = _restricted_lstsq(A, b, cols)
        if _loss(A @ x - b, loss) <= delta + slack:
            return active, len(active)
    raise Infeasible("no support meets the loss bound")


def brute_force_regularized_min(A, b, nu: float, partition, loss: str = "half_sq"):
    """Exact minimizer of ``nu f(x) + ||G(x)||_0`` by enumerating supports.

    Returns ``(x, support, value, runner_up_value)``; the runner-up is the best
    value over supports other than the optimal one, so callers can measure the
    optimality gap.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    results = []
    for active, cols in _supports(partition):
        x = _restricted_lstsq(A, b, cols)
        results.append((nu * _loss(A @ x - b, loss) + len(active), active, x))
    results.sort(key=lambda r: r[0])
    best, runner = results[0], results[1] if len(results) > 1 else (math.inf, None, None)
    return best[2], best[1], best[0], runner[0]


def brute_force_surrogate_min(objective: Callable, grids, dim: int,
                              vectorized: bool = True, chunk: int = 1 << 20):
    """Exhaustive grid minimum of ``objective``.

    Parameters
    ----------
    objective : callable
        With ``vectorized=True`` it receives an ``(N, dim)`` array of points
        and returns ``N`` values; otherwise one point at a time.
    grids : GridSpec or sequence of GridSpec
        One grid shared by all coordinates, or one per coordinate.

    Returns ``(argmin_point, value)``; ties go to the first point in
    row-major grid order.
    """
    if not 1 <= dim <= MAX_GRID_DIM:
        raise InvalidParameter(f"grid search supports 1..{MAX_GRID_DIM} dimensions")
    if isinstance(grids, GridSpec):
        grids = [grids] * dim
    if len(grids) != dim:
        raise DimensionMismatch("need one grid per coordinate")
    axes = [g.values() for g in grids]

    if not vectorized:
        best_val, best_pt = math.inf, None
        for pt in itertools.product(*axes):
            v = float(objective(np.array(pt)))
            if v < best_val:
                best_val, best_pt = v, np.array(pt)
        return best_pt, best_val

    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    best_val, best_pt = math.inf, None
    for start in range(0, mesh.shape[0], chunk):
        block = mesh[start:start + chunk]
        vals = np.asarray(objective(block), dtype=float)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_pt = float(vals[i]), block[i].copy()
    return best_pt, best_val
