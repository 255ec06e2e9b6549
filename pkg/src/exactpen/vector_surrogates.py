"""Group zero-norm: group norms, the psi*-based surrogate, truncation and thresholds.

Indices are 0-based throughout, including the JSON form of a partition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, InvalidParameter
from .scalar_phi import PhiSpec, psi_star


@dataclass(frozen=True)
class GroupPartition:
    n: int
    groups: tuple
    p: float = 2.0

    def __post_init__(self):
        groups = tuple(tuple(int(j) for j in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        p = _parse_p(self.p)
        object.__setattr__(self, "p", p)
        if any(len(g) == 0 for g in groups):
            raise InvalidParameter("groups must be nonempty")
        flat = sorted(j for g in groups for j in g)
        if flat != list(range(self.n)):
            raise InvalidParameter("groups must be disjoint and cover 0..n-1 exactly")

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def max_group_size(self) -> int:
        return max(len(g) for g in self.groups)

    @classmethod
    def singletons(cls, n: int, p=2.0) -> "GroupPartition":
        return cls(n, tuple((j,) for j in range(n)), p)

    def to_json(self) -> dict:
        return {"n": self.n, "groups": [list(g) for g in self.groups],
                "p": "inf" if math.isinf(self.p) else int(self.p)}

    @classmethod
    def from_json(cls, obj) -> "GroupPartition":
        return cls(int(obj["n"]), obj["groups"], obj.get("p", 2))


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        p = float(p)
    p = float(p)
    if p not in (1.0, 2.0, math.inf):
        raise InvalidParameter(f"group-norm exponent must be 1, 2 or inf, got {p}")
    return p


def group_norms(x, partition: GroupPartition) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (partition.n,):
        raise DimensionMismatch(f"expected a vector of length {partition.n}, got shape {x.shape}")
    return np.array([np.linalg.norm(x[list(g)], ord=partition.p) for g in partition.groups])


def group_zero_norm(x, partition: GroupPartition, tol: float = 0.0) -> int:
    if tol < 0:
        raise DomainError("tol must be nonnegative")
    return int(np.sum(group_norms(x, partition) > tol))


def surrogate_penalty_term(x, partition: GroupPartition, phi: PhiSpec, rho: float) -> float:
    """``sum_i [rho ||x_Ji||_p - psi*(rho ||x_Ji||_p)]``, a value in [0, m]."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    s = rho * group_norms(x, partition)
    return float(np.sum(s - psi_star(phi, s)))


def truncate_vector(x, partition: GroupPartition, phi: PhiSpec, rho: float) -> np.ndarray:
    """Zero every group whose scaled norm does not exceed ``phi'_-(1)``."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    x = np.asarray(x, dtype=float)
    out = x.copy()
    for g, norm in zip(partition.groups, group_norms(x, partition)):
        if not rho * norm > phi.d_minus_1:
            out[list(g)] = 0.0
    return out


def threshold_min_variant(phi: PhiSpec, alpha: float) -> float:
    """``phi'_-(1) / alpha`` for the constrained (minimization) form.

    ``alpha`` is a lower bound on the smallest active group norm over the
    feasible set; it has to be supplied by the caller.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    return phi.d_minus_1 / alpha


def group_beta(partition: GroupPartition) -> float:
    """``max(1, max_i |J_i|^((p-2)/(2p)))``; the exponent is 1/2 for p = inf."""
    p = partition.p
    expo = 0.5 if math.isinf(p) else (p - 2.0) / (2.0 * p)
    return max(1.0, partition.max_group_size ** expo)


def threshold_regularized_variant(phi: PhiSpec, nu: float, L_f: float,
                                  partition: GroupPartition) -> float:
    """``phi'_-(1) (1 - t*) beta nu L_f / (1 - t0)``.

    ``L_f`` is the Lipschitz constant (Euclidean norm) of the loss on the
    feasible set, supplied by the caller.
    """
    if not nu > 0 or not L_f > 0:
        raise DomainError("nu and L_f must be positive")
    return (phi.d_minus_1 * (1.0 - phi.t_star) * group_beta(partition) * nu * L_f
            / (1.0 - phi.t_zero))


@dataclass(frozen=True)
class GroupSurrogateParams:
    phi: PhiSpec
    rho: float
    nu: float = 1.0

    def __post_init__(self):
        if not self.rho > 0 or not self.nu > 0:
            raise DomainError("rho and nu must be positive")


def regularized_surrogate_objective(x, f_value: float, params: GroupSurrogateParams,
                                    partition: GroupPartition) -> float:
    """``nu f(x) + surrogate_penalty_term(x)`` with ``f(x)`` evaluated by the caller."""
    return params.nu * f_value + surrogate_penalty_term(x, partition, params.phi, params.rho)


def batched_surrogate_penalty(points: np.ndarray, partition: GroupPartition,
                              phi: PhiSpec, rho: float) -> np.ndarray:
    """Row-wise :func:`surrogate_penalty_term` for an ``(N, n)`` array of points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != partition.n:
        raise DimensionMismatch("points must have shape (N, n)")
    total = np.zeros(pts.shape[0])
    for g in partition.groups:
        s = rho * np.linalg.norm(pts[:, list(g)], ord=partition.p, axis=1)
        total += s - psi_star(phi, s)
    return total
