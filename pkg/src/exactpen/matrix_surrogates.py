"""Singular-value and entrywise surrogates for rank and zero-norm terms.

Matrices are plain 2-d numpy arrays.  Functions that depend only on singular
values work for either orientation; :func:`as_wide` applies the ``n1 <= n2``
convention explicitly when a caller needs it.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError, SvdFailure
from .scalar_phi import PhiSpec, phi_eval, psi_star, psi_star_subgrad


class SvdTriple(NamedTuple):
    U: np.ndarray
    sigma: np.ndarray
    Vt: np.ndarray


def as_wide(X) -> tuple:
    """Return ``(X', flipped)`` with ``X'`` having no more rows than columns."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DomainError("expected a 2-d matrix")
    if not np.all(np.isfinite(X)):
        raise DomainError("matrix has non-finite entries")
    if X.shape[0] > X.shape[1]:
        return X.T, True
    return X, False


def svd(X) -> SvdTriple:
    """Thin SVD with singular values sorted nonincreasing and clamped at 0."""
    X = np.asarray(X, dtype=float)
    try:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    return SvdTriple(U, np.maximum(s, 0.0), Vt)


def singular_values(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return np.zeros(0)
    try:
        s = np.linalg.svd(X, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    return np.maximum(s, 0.0)


def spectral_norm(X) -> float:
    s = singular_values(X)
    return float(s[0]) if s.size else 0.0


def _recompose(U, s, Vt) -> np.ndarray:
    return (U * s) @ Vt


def theta_rho(X, phi: PhiSpec, rho: float) -> float:
    """``sum_i psi*(rho sigma_i(X))``, a convex function of X."""
    _check_rho(rho)
    return float(np.sum(psi_star(phi, rho * singular_values(X))))


def rank_surrogate(X, phi: PhiSpec, rho: float) -> float:
    """``rho ||X||_* - theta_rho(X)``.

    Lies in [0, min(X.shape)] and equals rank(X) once every nonzero singular
    value satisfies ``rho sigma_i > phi'_-(1)``.
    """
    _check_rho(rho)
    s = rho * singular_values(X)
    return float(np.sum(s - psi_star(phi, s)))


def truncate_matrix(X, phi: PhiSpec, rho: float) -> np.ndarray:
    """Zero the singular values with ``rho sigma_i <= phi'_-(1)``."""
    _check_rho(rho)
    U, s, Vt = svd(X)
    keep = rho * s > phi.d_minus_1
    return _recompose(U, np.where(keep, s, 0.0), Vt)


def truncate_entries(Y, phi: PhiSpec, rho: float, keep_sign: bool = False) -> np.ndarray:
    """Entrywise truncation: ``|Y_ij|`` where ``rho |Y_ij| > phi'_-(1)``, else 0.

    The magnitude form drops signs.  ``keep_sign=True`` keeps ``Y_ij`` itself
    on the retained entries instead.
    """
    _check_rho(rho)
    Y = np.asarray(Y, dtype=float)
    A = np.abs(Y)
    keep = rho * A > phi.d_minus_1
    return np.where(keep, Y if keep_sign else A, 0.0)


def entrywise_surrogate(Y, phi: PhiSpec, rho: float) -> float:
    """``rho ||Y||_1 - sum_ij psi*(rho |Y_ij|)``."""
    s = rho * np.abs(np.asarray(Y, dtype=float))
    return float(np.sum(s - psi_star(phi, s)))


def _check_rho(rho):
    if not rho > 0:
        raise DomainError("rho must be positive")


def _check_positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")


def threshold_rank_min(phi: PhiSpec, alpha: float) -> float:
    """Penalty threshold ``phi'_-(1) / alpha`` for the rank-constrained form."""
    _check_positive(alpha=alpha)
    return phi.d_minus_1 / alpha


def threshold_rank_regularized(phi: PhiSpec, nu: float, L_f: float) -> float:
    """``phi'_-(1) (1 - t*) nu L_f / (1 - t0)``."""
    _check_positive(nu=nu, L_f=L_f)
    return phi.d_minus_1 * (1.0 - phi.t_star) * nu * L_f / (1.0 - phi.t_zero)


def threshold_joint_regularized(phi: PhiSpec, nu: float, L_f: float, lam: float) -> float:
    """Rank plus zero-norm version: the rank threshold divided by ``min(1, lam)``."""
    _check_positive(nu=nu, L_f=L_f, lam=lam)
    return threshold_rank_regularized(phi, nu, L_f) / min(1.0, lam)


def joint_surrogate(X, Y, phi: PhiSpec, rho: float, lam: float) -> float:
    """Rank surrogate of X plus ``lam`` times the entrywise surrogate of Y."""
    _check_positive(rho=rho, lam=lam)
    return rank_surrogate(X, phi, rho) + lam * entrywise_surrogate(Y, phi, rho)


def simultaneous_surrogate(X, phi: PhiSpec, rho: float, lam: float,
                           symmetric: bool = False) -> float:
    """Rank and zero-norm surrogate on the same matrix.

    By default the l1 block carries coefficient ``rho`` while ``lam`` scales
    only the psi* sum::

        rho ||X||_* - sum psi*(rho sigma_i) + rho ||X||_1 - lam sum psi*(rho |X_ij|)

    ``symmetric=True`` uses ``rho lam ||X||_1`` instead, i.e. ``lam`` times the
    full entrywise surrogate.  The two agree when ``lam = 1``.
    """
    _check_positive(rho=rho, lam=lam)
    X = np.asarray(X, dtype=float)
    if symmetric:
        return rank_surrogate(X, phi, rho) + lam * entrywise_surrogate(X, phi, rho)
    s = rho * np.abs(X)
    return rank_surrogate(X, phi, rho) + float(np.sum(s) - lam * np.sum(psi_star(phi, s)))


def prox_nuclear_spectral_box(X, tau: float, gamma1: float) -> np.ndarray:
    """``argmin_Z 1/2 ||Z - X||_F^2 + tau ||Z||_*`` subject to ``||Z|| <= gamma1``.

    Each singular value maps to ``min(max(sigma - tau, 0), gamma1)``.
    """
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    _check_positive(gamma1=gamma1)
    U, s, Vt = svd(X)
    return _recompose(U, np.minimum(np.maximum(s - tau, 0.0), gamma1), Vt)


def prox_weighted_l1_box(Y, weights, gamma2: float) -> np.ndarray:
    """Entrywise ``clip(soft(y, w), -gamma2, gamma2)``."""
    Y = np.asarray(Y, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise DomainError("weights must be nonnegative")
    _check_positive(gamma2=gamma2)
    z = np.sign(Y) * np.maximum(np.abs(Y) - w, 0.0)
    return np.clip(z, -gamma2, gamma2)


def subgrad_spectral(X, phi: PhiSpec, rho: float) -> np.ndarray:
    """``W = U Diag(w) V^T`` with ``w_i`` a subgradient of psi* at ``rho sigma_i``.

    The choice attains ``min_{||W|| <= 1} sum phi(sigma_i(W)) - rho <X, W>``,
    whose value is ``-theta_rho(X)``.
    """
    _check_rho(rho)
    U, s, Vt = svd(X)
    w = np.asarray(psi_star_subgrad(phi, rho * s))
    return _recompose(U, w, Vt)


def subgrad_entrywise(Y, phi: PhiSpec, rho: float) -> np.ndarray:
    """``S_ij`` a subgradient of psi* at ``rho |Y_ij|``; entries lie in [0, 1]."""
    _check_rho(rho)
    return np.asarray(psi_star_subgrad(phi, rho * np.abs(np.asarray(Y, dtype=float))))


def spectral_attainment_gap(X, W, phi: PhiSpec, rho: float) -> float:
    """``sum phi(sigma_i(W)) - rho <X, W> + theta_rho(X)``; zero when W is optimal."""
    sw = singular_values(W)
    return float(np.sum(phi_eval(phi, sw))
                 - rho * np.sum(np.asarray(X) * W) + theta_rho(X, phi, rho))


def entrywise_attainment_gap(Y, S, phi: PhiSpec, rho: float) -> float:
    """``sum phi(|S_ij|) - rho <|Y|, S> + sum psi*(rho |Y_ij|)``."""
    A = np.abs(np.asarray(Y, dtype=float))
    return float(np.sum(phi_eval(phi, np.abs(S))) - rho * np.sum(A * S)
                 + np.sum(psi_star(phi, rho * A)))
