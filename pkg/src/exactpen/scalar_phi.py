"""Scalar generator functions and their conjugates.

Every generator ``phi`` here is convex on [0, 1], attains its minimum 0 at
``t_star < 1`` and satisfies ``phi(1) = 1``.  The associated ``psi`` equals
``phi`` on [0, 1] and ``+inf`` elsewhere, so its conjugate

    psi*(s) = sup_{t in [0,1]} { s t - phi(t) }

is finite on the whole real line, nondecreasing, and affine with slope 1 for
large ``s``.  Four of the five kinds are defined as ``phi = varphi / varphi(1)``
for a raw function ``varphi``; then ``psi*(s) = h(c s) / c`` where ``c =
varphi(1)`` and ``h`` is the conjugate of ``varphi`` restricted to [0, 1].

All evaluation functions accept scalars or numpy arrays and return the same
shape (a Python float for scalar input).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import DomainError, InvalidParameter, ValidationFailure

ArrayLike = Union[float, np.ndarray]

SCAD_DEFAULT_A = 3.7
DEFAULT_EPS = 0.5
DEFAULT_Q = 0.5


class PhiKind(str, enum.Enum):
    LINEAR = "Linear"
    POWERQ = "PowerQ"
    LOG = "Log"
    ARCTAN = "Arctan"
    SCAD = "Scad"


# positional order of the parameters accepted by make_phi for each kind
_PARAM_NAMES = {
    PhiKind.LINEAR: (),
    PhiKind.POWERQ: ("eps", "q"),
    PhiKind.LOG: ("eps",),
    PhiKind.ARCTAN: ("eps",),
    PhiKind.SCAD: ("a",),
}
_PARAM_DEFAULTS = {"eps": DEFAULT_EPS, "q": DEFAULT_Q, "a": SCAD_DEFAULT_A}


@dataclass(frozen=True)
class PhiSpec:
    """A validated member of the generator family.

    Build instances with :func:`make_phi`; the cached constants are filled in
    there and checked against the family invariants.
    """

    kind: PhiKind
    params: tuple  # ((name, value), ...) in canonical order
    t_star: float
    d_minus_1: float
    t_zero: float
    scale: float  # varphi(1); 1.0 for Linear

    def param(self, name: str) -> float:
        return dict(self.params)[name]

    @property
    def saturation(self) -> float:
        """``1 / (1 - t_star)``, the slope defining ``t_zero``."""
        return 1.0 / (1.0 - self.t_star)

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "params": dict(self.params)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "PhiSpec":
        try:
            kind = obj["kind"]
        except (KeyError, TypeError):
            raise InvalidParameter("phi config needs a 'kind' field") from None
        return make_phi(kind, obj.get("params", {}))

    # convenience wrappers so call sites can write phi.psi_star(s)
    def __call__(self, t):
        return phi_eval(self, t)

    def psi_star(self, s):
        return psi_star(self, s)

    def psi_star_subgrad(self, s):
        return psi_star_subgrad(self, s)


def _out(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


def _parse_kind(kind) -> PhiKind:
    if isinstance(kind, PhiKind):
        return kind
    for k in PhiKind:
        if str(kind).lower() == k.value.lower():
            return k
    raise InvalidParameter(f"unknown phi kind {kind!r}")


def _parse_params(kind: PhiKind, params) -> tuple:
    names = _PARAM_NAMES[kind]
    if params is None:
        params = {}
    if isinstance(params, Mapping):
        extra = set(params) - set(names)
        if extra:
            raise InvalidParameter(f"{kind.value} does not take parameters {sorted(extra)}")
        values = {n: float(params.get(n, _PARAM_DEFAULTS[n])) for n in names}
    else:
        params = list(params)
        if len(params) > len(names):
            raise InvalidParameter(
                f"{kind.value} takes at most {len(names)} parameters, got {len(params)}")
        values = {n: _PARAM_DEFAULTS[n] for n in names}
        values.update({n: float(v) for n, v in zip(names, params)})

    for name, v in values.items():
        if not math.isfinite(v):
            raise InvalidParameter(f"{name} must be finite")
        if name in ("eps", "q") and not 0.0 < v < 1.0:
            raise InvalidParameter(f"{name} must lie in (0, 1), got {v}")
        if name == "a" and not v > 1.0:
            raise InvalidParameter(f"a must exceed 1, got {v}")
    return tuple((n, values[n]) for n in names)


# ---------------------------------------------------------------------------
# raw functions varphi, their derivatives and restricted conjugates h
# ---------------------------------------------------------------------------

def _raw_upper(kind: PhiKind, p: dict) -> float:
    """Supremum of dom(varphi); the domain is open there except for Linear/Scad."""
    if kind in (PhiKind.POWERQ, PhiKind.LOG, PhiKind.ARCTAN):
        return 1.0 + p["eps"]
    return math.inf


def _raw_lower(kind: PhiKind, p: dict) -> float:
    return 0.0 if kind is PhiKind.ARCTAN else -math.inf


def _raw_value(kind: PhiKind, p: dict, t: np.ndarray) -> np.ndarray:
    if kind is PhiKind.LINEAR:
        return t.astype(float)
    if kind is PhiKind.SCAD:
        return 0.5 * (p["a"] - 1.0) * t * t + t
    eps = p["eps"]
    gap = 1.0 - t + eps
    if kind is PhiKind.POWERQ:
        q = p["q"]
        k = (q - 1.0) / q
        return -t - k * gap ** (q / (q - 1.0)) + eps + k
    if kind is PhiKind.LOG:
        return -t - np.log(gap) + eps
    # Arctan
    return (1.0 + eps) * np.arctan(np.sqrt(t / gap)) - np.sqrt(t * gap)


def _raw_deriv(kind: PhiKind, p: dict, t: np.ndarray) -> np.ndarray:
    if kind is PhiKind.LINEAR:
        return np.ones_like(t, dtype=float)
    if kind is PhiKind.SCAD:
        return (p["a"] - 1.0) * t + 1.0
    eps = p["eps"]
    gap = 1.0 - t + eps
    if kind is PhiKind.POWERQ:
        return -1.0 + gap ** (1.0 / (p["q"] - 1.0))
    if kind is PhiKind.LOG:
        return -1.0 + 1.0 / gap
    return np.sqrt(t / gap)


def _raw_argmax(kind: PhiKind, p: dict, u: np.ndarray) -> np.ndarray:
    """Smallest maximizer over [0, 1] of ``u t - varphi(t)``."""
    if kind is PhiKind.LINEAR:
        return np.where(u > 1.0, 1.0, 0.0)
    if kind is PhiKind.SCAD:
        t = (u - 1.0) / (p["a"] - 1.0)
    elif kind is PhiKind.ARCTAN:
        u2 = np.square(np.maximum(u, 0.0))
        t = u2 * (1.0 + p["eps"]) / (1.0 + u2)
    else:
        eps = p["eps"]
        v = np.maximum(u + 1.0, 1e-300)
        if kind is PhiKind.POWERQ:
            t = 1.0 + eps - v ** (p["q"] - 1.0)
        else:
            t = 1.0 + eps - 1.0 / v
        t = np.where(u + 1.0 > 0.0, t, 0.0)
    return np.clip(t, 0.0, 1.0)


def _raw_conjugate(kind: PhiKind, p: dict, u: np.ndarray) -> np.ndarray:
    """Closed-form ``h(u) = sup_{t in [0,1]} { u t - varphi(t) }``, branch by branch."""
    u = np.asarray(u, dtype=float)
    if kind is PhiKind.LINEAR:
        return np.where(u > 1.0, u - 1.0, 0.0)

    if kind is PhiKind.SCAD:
        a = p["a"]
        return np.where(u <= 1.0, 0.0,
                        np.where(u <= a, np.square(u - 1.0) / (2.0 * (a - 1.0)),
                                 u - 0.5 * (a + 1.0)))

    eps = p["eps"]
    if kind is PhiKind.POWERQ:
        q = p["q"]
        k = (q - 1.0) / q
        e = q / (q - 1.0)
        hi = eps ** (1.0 / (q - 1.0)) - 1.0
        lo = (1.0 + eps) ** (1.0 / (q - 1.0)) - 1.0
        um = np.clip(u, lo, hi)
        top = u + 1.0 + k * eps ** e - eps - k
        mid = (1.0 + eps) * um - (um + 1.0) ** q / q + 1.0 / q
        bottom = k * (1.0 + eps) ** e - eps - k
        return np.where(u >= hi, top, np.where(u > lo, mid, bottom))

    if kind is PhiKind.LOG:
        hi = 1.0 / eps - 1.0
        lo = 1.0 / (1.0 + eps) - 1.0
        um = np.clip(u, lo, hi)
        top = u + 1.0 + math.log(eps) - eps
        mid = um * (1.0 + eps) - np.log(um + 1.0)
        bottom = math.log(1.0 + eps) - eps
        return np.where(u >= hi, top, np.where(u > lo, mid, bottom))

    # Arctan
    hi = math.sqrt(1.0 / eps)
    um = np.clip(u, 0.0, hi)
    top = u - (1.0 + eps) * math.atan(hi) + math.sqrt(eps)
    mid = (1.0 + eps) * (um - np.arctan(um))
    return np.where(u >= hi, top, np.where(u > 0.0, mid, 0.0))


def _raw_t_star(kind: PhiKind, p: dict) -> float:
    if kind in (PhiKind.POWERQ, PhiKind.LOG):
        return p["eps"]
    return 0.0


def _closed_form_t_zero(kind: PhiKind, p: dict, scale: float, t_star: float) -> float:
    """Smallest ``t`` with ``phi'(t) = 1 / (1 - t_star)``, solved per kind."""
    target = scale / (1.0 - t_star)  # in raw (varphi) units
    if kind is PhiKind.LINEAR:
        return 0.0
    if kind is PhiKind.SCAD:
        return (target - 1.0) / (p["a"] - 1.0)
    if kind is PhiKind.ARCTAN:
        return target * target * (1.0 + p["eps"]) / (1.0 + target * target)
    eps = p["eps"]
    if kind is PhiKind.POWERQ:
        return 1.0 + eps - (1.0 + target) ** (p["q"] - 1.0)
    return 1.0 + eps - 1.0 / (1.0 + target)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def make_phi(kind, params=None) -> PhiSpec:
    """Build and validate a generator of the given kind.

    Parameters
    ----------
    kind : PhiKind or str
        One of ``Linear``, ``PowerQ``, ``Log``, ``Arctan``, ``Scad``.
    params : sequence or mapping, optional
        Positional values (``[eps, q]`` for PowerQ, ``[eps]`` for Log and
        Arctan, ``[a]`` for Scad) or a ``{name: value}`` mapping.  Missing
        values fall back to eps=0.5, q=0.5, a=3.7.

    Raises
    ------
    InvalidParameter
        If a parameter is out of range.
    ValidationFailure
        If the resulting function violates the family invariants.
    """
    kind = _parse_kind(kind)
    ptuple = _parse_params(kind, params)
    p = dict(ptuple)

    scale = 1.0 if kind is PhiKind.LINEAR else float(_raw_value(kind, p, np.float64(1.0)))
    if not scale > 0.0:
        raise ValidationFailure(f"{kind.value}: varphi(1) = {scale} is not positive")
    t_star = _raw_t_star(kind, p)
    d_minus_1 = float(_raw_deriv(kind, p, np.float64(1.0))) / scale
    t_zero = _closed_form_t_zero(kind, p, scale, t_star)

    phi = PhiSpec(kind=kind, params=ptuple, t_star=t_star, d_minus_1=d_minus_1,
                  t_zero=float(t_zero), scale=scale)
    _validate(phi)
    return phi


def _validate(phi: PhiSpec) -> None:
    tol = 1e-12
    if not 0.0 <= phi.t_star < 1.0:
        raise ValidationFailure(f"t_star = {phi.t_star} outside [0, 1)")
    if abs(phi_eval(phi, phi.t_star)) > tol or abs(phi_eval(phi, 1.0) - 1.0) > tol:
        raise ValidationFailure("phi(t_star) = 0 and phi(1) = 1 must hold")

    grid = np.linspace(0.0, 1.0, 2001)
    vals = phi_eval(phi, grid)
    if vals.min() < -tol:
        raise ValidationFailure("phi takes negative values on [0, 1]")

    rng = np.random.default_rng(0)
    t = np.sort(rng.uniform(0.0, 1.0, size=(1000, 3)), axis=1)
    t1, t2, t3 = t.T
    lam = (t3 - t2) / np.maximum(t3 - t1, 1e-300)
    chord = lam * phi_eval(phi, t1) + (1.0 - lam) * phi_eval(phi, t3)
    if np.any(phi_eval(phi, t2) > chord + 1e-10):
        raise ValidationFailure("phi is not convex on [0, 1]")

    if phi.d_minus_1 < phi.saturation - 1e-12:
        raise ValidationFailure("left derivative at 1 is below 1/(1 - t_star)")
    if not 0.0 <= phi.t_zero < 1.0:
        raise ValidationFailure(f"t_zero = {phi.t_zero} outside [0, 1)")
    lo = phi_derivative(phi, phi.t_zero, side="left")
    hi = phi_derivative(phi, phi.t_zero, side="right")
    slack = 1e-9 * max(1.0, phi.saturation)
    if not lo - slack <= phi.saturation <= hi + slack:
        raise ValidationFailure("1/(1 - t_star) is not a subgradient of phi at t_zero")


def phi_domain(phi: PhiSpec) -> tuple:
    """``(lower, upper)`` bounds of dom(phi).  The upper end is open when finite."""
    p = dict(phi.params)
    return _raw_lower(phi.kind, p), _raw_upper(phi.kind, p)


def _check_domain(phi: PhiSpec, t: np.ndarray) -> None:
    lo, hi = phi_domain(phi)
    if np.any(np.isnan(t)) or np.any(t < lo) or np.any(t >= hi):
        raise DomainError(f"{phi.kind.value}: argument outside dom(phi) = [{lo}, {hi})")


def phi_eval(phi: PhiSpec, t: ArrayLike) -> ArrayLike:
    """Evaluate the normalized generator at ``t``.

    Raises
    ------
    DomainError
        If ``t`` lies outside dom(phi).
    """
    t = np.asarray(t, dtype=float)
    _check_domain(phi, t)
    return _out(_raw_value(phi.kind, dict(phi.params), t) / phi.scale)


def phi_derivative(phi: PhiSpec, t: ArrayLike, side: str = "left") -> ArrayLike:
    """One-sided derivative of phi at ``t`` (all kinds are C^1 on their domain).

    At ``t = 0`` for the Arctan kind, whose domain starts there, the left
    derivative is ``-inf``.
    """
    t = np.asarray(t, dtype=float)
    _check_domain(phi, t)
    d = _raw_deriv(phi.kind, dict(phi.params), t) / phi.scale
    if side == "left" and phi.kind is PhiKind.ARCTAN:
        d = np.where(t <= 0.0, -np.inf, d)
    elif side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    return _out(d)


def psi_star(phi: PhiSpec, s: ArrayLike) -> ArrayLike:
    """Closed-form conjugate ``sup_{t in [0,1]} { s t - phi(t) }``."""
    s = np.asarray(s, dtype=float)
    c = phi.scale
    return _out(_raw_conjugate(phi.kind, dict(phi.params), c * s) / c)


def psi_star_subgrad(phi: PhiSpec, s: ArrayLike) -> ArrayLike:
    """An element of the subdifferential of psi* at ``s``.

    This is the maximizing ``t`` in the conjugate, so it always lies in
    [0, 1].  Where the maximizer is not unique (the kink of the Linear kind at
    ``s = 1``) the smallest one is returned.  For Scad this is

        min(1, max(((a + 1) s - 2) / (2 (a - 1)), 0)).
    """
    s = np.asarray(s, dtype=float)
    return _out(_raw_argmax(phi.kind, dict(phi.params), phi.scale * s))


def scalar_penalty_value(phi: PhiSpec, rho_omega: ArrayLike) -> ArrayLike:
    """``min_{t in [0,1]} { phi(t) + s (1 - t) }`` for ``s = rho_omega >= 0``.

    Equals ``s - psi*(s)``; returns exactly 1 once ``s`` exceeds the left
    derivative of phi at 1.

    Raises
    ------
    DomainError
        If ``rho_omega`` is negative.
    """
    s = np.asarray(rho_omega, dtype=float)
    if np.any(np.isnan(s)) or np.any(s < 0.0):
        raise DomainError("rho_omega must be nonnegative")
    # the value never exceeds 1; clamp the last-ulp rounding near the kink
    val = np.minimum(s - np.asarray(psi_star(phi, s)), 1.0)
    return _out(np.where(s > phi.d_minus_1, 1.0, val))


def t_zero_by_bisection(phi: PhiSpec, tol: float = 1e-14) -> float:
    """Smallest ``t`` in [0, 1) with ``phi'_-(t) <= 1/(1-t*) <= phi'_+(t)``.

    Bisection on the nondecreasing map ``t -> phi'_+(t)``.
    """
    target = phi.saturation
    if phi_derivative(phi, 0.0, side="right") >= target:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi_derivative(phi, mid, side="right") >= target:
            hi = mid
        else:
            lo = mid
    return hi


def compute_t_zero(phi: PhiSpec) -> float:
    """The constant ``t_zero``; closed form per kind, bisection as fallback."""
    p = dict(phi.params)
    try:
        t0 = _closed_form_t_zero(phi.kind, p, phi.scale, phi.t_star)
    except (ArithmeticError, KeyError):
        return t_zero_by_bisection(phi)
    if not (0.0 <= t0 < 1.0 and math.isfinite(t0)):
        return t_zero_by_bisection(phi)
    return float(t0)


def all_kinds() -> list:
    """One PhiSpec per kind with default parameters."""
    return [make_phi(k) for k in PhiKind]


def penalty_value_bounds(phi: PhiSpec, rho_omega: float) -> tuple:
    """Which value-bound case applies at ``rho_omega`` and its lower bound.

    Returns ``(case, bound)`` with case 1 meaning the value is exactly 1.
    """
    s = float(rho_omega)
    if s > phi.d_minus_1:
        return 1, 1.0
    if s >= phi.saturation:
        return 2, s * (1.0 - phi.t_zero) / (phi.d_minus_1 * (1.0 - phi.t_star))
    return 3, s * (1.0 - phi.t_zero)
