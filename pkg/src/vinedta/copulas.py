"""Bivariate copula building blocks.

Seven families: independence, bivariate normal (BVN), Frank, and Clayton
rotated by 0, 90, 180 and 270 degrees.  Each family exposes the conditional
cdf C(w|u), its inverse in the second argument, the copula density, and the
Kendall tau <-> natural parameter conversions.  These are the pair-copula
blocks of the trivariate C-vine; everything is a closed form except the
Frank tau integral, which is evaluated by Gauss-Legendre quadrature.

All evaluation routines are vectorized over numpy arrays.  The public
functions validate their domains and reject boundary values; the private
``_*_raw`` variants skip validation and are shared with the fast kernels.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
import math

import numpy as np
from scipy import optimize
from scipy.special import ndtr, ndtri


class CopulaFamily(IntEnum):
    INDEPENDENCE = 0
    BVN = 1
    FRANK = 2
    CLAYTON0 = 3
    CLAYTON90 = 4
    CLAYTON180 = 5
    CLAYTON270 = 6


# Kendall tau intervals (open) admitted by each parametric family.
TAU_INTERVALS = {
    CopulaFamily.BVN: (-1.0, 1.0),
    CopulaFamily.FRANK: (-1.0, 1.0),
    CopulaFamily.CLAYTON0: (0.0, 1.0),
    CopulaFamily.CLAYTON180: (0.0, 1.0),
    CopulaFamily.CLAYTON90: (-1.0, 0.0),
    CopulaFamily.CLAYTON270: (-1.0, 0.0),
}

# Frank parameters below this magnitude are numerically 0/0; the family is
# continuous through independence, so such specs evaluate as independence.
FRANK_INDEP_EPS = 1e-5

# Clayton parameters this small lose all precision in the (1 + s)^(-1/theta)
# evaluation; the family limit at theta -> 0+ is independence, so cut over.
CLAYTON_INDEP_EPS = 1e-10


def _check_theta(family: CopulaFamily, theta) -> None:
    if family == CopulaFamily.INDEPENDENCE:
        if theta is not None:
            raise ValueError("independence copula carries no parameter")
        return
    if theta is None:
        raise ValueError(f"{family.name} requires a parameter value")
    th = float(theta)
    if not math.isfinite(th):
        raise ValueError(f"{family.name} parameter must be finite, got {theta!r}")
    if family == CopulaFamily.BVN:
        if not -1.0 <= th <= 1.0:
            raise ValueError(f"BVN parameter must lie in [-1, 1], got {th}")
    elif family == CopulaFamily.FRANK:
        if th == 0.0:
            raise ValueError("Frank parameter must be nonzero")
    else:
        if th <= 0.0:
            raise ValueError(f"{family.name} parameter must be positive, got {th}")


@dataclass(frozen=True)
class CopulaSpec:
    """A copula family together with its natural dependence parameter.

    ``theta`` may be None for structure-only specs (family placeholders used
    when the parameter is estimated later); evaluation requires a value.
    """

    family: CopulaFamily
    theta: float | None = None

    def __post_init__(self):
        if self.theta is not None or self.family == CopulaFamily.INDEPENDENCE:
            _check_theta(self.family, self.theta)

    @property
    def is_independence(self) -> bool:
        return self.family == CopulaFamily.INDEPENDENCE


def _validate_unit(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError(f"{name} must lie strictly inside (0, 1)")
    return arr


def _require_theta(spec: CopulaSpec) -> float:
    _check_theta(spec.family, spec.theta)
    if spec.family == CopulaFamily.INDEPENDENCE:
        return 0.0
    return float(spec.theta)


# ---------------------------------------------------------------------------
# raw family formulas (no validation, vectorized)
# ---------------------------------------------------------------------------

def _bvn_ccdf_inv(theta, v, u):
    if abs(theta) == 1.0:
        # degenerate comonotone / countermonotone limits
        return np.broadcast_to(u if theta > 0 else 1.0 - u, np.broadcast(v, u).shape).copy()
    z = math.sqrt(1.0 - theta * theta) * ndtri(v) + theta * ndtri(u)
    return ndtr(z)


def _bvn_ccdf(theta, w, u):
    z = (ndtri(w) - theta * ndtri(u)) / math.sqrt(1.0 - theta * theta)
    return ndtr(z)


def _bvn_density(theta, u, v):
    x = ndtri(u)
    y = ndtri(v)
    r2 = 1.0 - theta * theta
    return np.exp(-(theta * theta * (x * x + y * y) - 2.0 * theta * x * y) / (2.0 * r2)) / math.sqrt(r2)


def _frank_log_denom(theta, u, w):
    # log of e^{-th u} + e^{-th w} - e^{-th} - e^{-th(u+w)}, grouped into two
    # positive terms so large theta cannot cancel catastrophically
    a = -theta * u + np.log1p(-np.exp(-theta * (1.0 - u)))
    b = -theta * w + np.log1p(-np.exp(-theta * u))
    return np.logaddexp(a, b)


def _frank_ccdf_inv(theta, v, u):
    if theta < 0.0:
        return 1.0 - _frank_ccdf_inv(-theta, 1.0 - v, u)
    log1mv = np.log1p(-v)
    logv = np.log(v)
    num = np.logaddexp(-theta * u + log1mv, -theta + logv)
    den = np.logaddexp(-theta * u + log1mv, logv)
    return (den - num) / theta


def _frank_ccdf(theta, w, u):
    if theta < 0.0:
        return 1.0 - _frank_ccdf(-theta, 1.0 - w, u)
    logp = -theta * u + np.log1p(-np.exp(-theta * w)) - _frank_log_denom(theta, u, w)
    return np.exp(logp)


def _frank_density(theta, u, v):
    if theta < 0.0:
        return _frank_density(-theta, u, 1.0 - v)
    logc = (
        math.log(theta)
        + math.log(-math.expm1(-theta))
        - theta * (u + v)
        - 2.0 * _frank_log_denom(theta, u, v)
    )
    return np.exp(logc)


def _log_expm1(x):
    # log(e^x - 1) for x > 0 without overflow
    x = np.asarray(x, dtype=float)
    small = np.log(np.expm1(np.minimum(x, 33.0)))
    return np.where(x > 33.0, x + np.log1p(-np.exp(-np.maximum(x, 33.0))), small)


def _clayton_ccdf_inv(theta, v, u):
    # w = (1 + u^-th (v^{-th/(1+th)} - 1))^{-1/th}, evaluated in log space
    c = theta / (1.0 + theta)
    s = -theta * np.log(u) + _log_expm1(-c * np.log(v))
    return np.exp(-np.logaddexp(0.0, s) / theta)


def _clayton_ccdf_inv_c(theta, v, u):
    # complement 1 - ccdf_inv, accurate when the inverse sits next to 1
    c = theta / (1.0 + theta)
    s = -theta * np.log(u) + _log_expm1(-c * np.log(v))
    return -np.expm1(-np.logaddexp(0.0, s) / theta)


def _clayton_log_sum(theta, u, w):
    # log(u^-th + w^-th - 1) without overflow
    a = -theta * np.log(u)
    b = -theta * np.log(w)
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def _clayton_log_ccdf(theta, w, u):
    # log C(w|u) = -(1+1/th) log(1 + t) with t = u^th (w^-th - 1); factoring
    # u^th inside the log avoids cancellation when C is within an ulp of 1
    log_t = theta * np.log(u) + _log_expm1(-theta * np.log(w))
    return -(1.0 + 1.0 / theta) * np.logaddexp(0.0, log_t)


def _clayton_ccdf(theta, w, u):
    return np.exp(_clayton_log_ccdf(theta, w, u))


def _clayton_density(theta, u, v):
    logc = (
        math.log1p(theta)
        - (theta + 1.0) * (np.log(u) + np.log(v))
        - (1.0 / theta + 2.0) * _clayton_log_sum(theta, u, v)
    )
    return np.exp(logc)


def _ccdf_inv_raw(family: int, theta: float, v, u):
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if family == CopulaFamily.INDEPENDENCE:
        return np.broadcast_to(v, np.broadcast(v, u).shape).copy()
    if family == CopulaFamily.BVN:
        return _bvn_ccdf_inv(theta, v, u)
    if family == CopulaFamily.FRANK:
        if abs(theta) < FRANK_INDEP_EPS:
            return np.broadcast_to(v, np.broadcast(v, u).shape).copy()
        return _frank_ccdf_inv(theta, v, u)
    if CopulaFamily.CLAYTON0 <= family <= CopulaFamily.CLAYTON270 and theta < CLAYTON_INDEP_EPS:
        return np.broadcast_to(v, np.broadcast(v, u).shape).copy()
    if family == CopulaFamily.CLAYTON0:
        return _clayton_ccdf_inv(theta, v, u)
    if family == CopulaFamily.CLAYTON90:
        return _clayton_ccdf_inv(theta, v, 1.0 - u)
    if family == CopulaFamily.CLAYTON180:
        return _clayton_ccdf_inv_c(theta, 1.0 - v, 1.0 - u)
    if family == CopulaFamily.CLAYTON270:
        return _clayton_ccdf_inv_c(theta, 1.0 - v, u)
    raise ValueError(f"unknown copula family code {family}")


def _ccdf_raw(family: int, theta: float, w, u):
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    if family == CopulaFamily.INDEPENDENCE:
        return np.broadcast_to(w, np.broadcast(w, u).shape).copy()
    if family == CopulaFamily.BVN:
        return _bvn_ccdf(theta, w, u)
    if family == CopulaFamily.FRANK:
        if abs(theta) < FRANK_INDEP_EPS:
            return np.broadcast_to(w, np.broadcast(w, u).shape).copy()
        return _frank_ccdf(theta, w, u)
    if CopulaFamily.CLAYTON0 <= family <= CopulaFamily.CLAYTON270 and theta < CLAYTON_INDEP_EPS:
        return np.broadcast_to(w, np.broadcast(w, u).shape).copy()
    if family == CopulaFamily.CLAYTON0:
        return _clayton_ccdf(theta, w, u)
    if family == CopulaFamily.CLAYTON90:
        return _clayton_ccdf(theta, w, 1.0 - u)
    if family == CopulaFamily.CLAYTON180:
        return -np.expm1(_clayton_log_ccdf(theta, 1.0 - w, 1.0 - u))
    if family == CopulaFamily.CLAYTON270:
        return -np.expm1(_clayton_log_ccdf(theta, 1.0 - w, u))
    raise ValueError(f"unknown copula family code {family}")


def _density_raw(family: int, theta: float, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if family == CopulaFamily.INDEPENDENCE:
        return np.ones(np.broadcast(u, v).shape)
    if family == CopulaFamily.BVN:
        return _bvn_density(theta, u, v)
    if family == CopulaFamily.FRANK:
        if abs(theta) < FRANK_INDEP_EPS:
            return np.ones(np.broadcast(u, v).shape)
        return _frank_density(theta, u, v)
    if CopulaFamily.CLAYTON0 <= family <= CopulaFamily.CLAYTON270 and theta < CLAYTON_INDEP_EPS:
        return np.ones(np.broadcast(u, v).shape)
    if family == CopulaFamily.CLAYTON0:
        return _clayton_density(theta, u, v)
    if family == CopulaFamily.CLAYTON90:
        return _clayton_density(theta, 1.0 - u, v)
    if family == CopulaFamily.CLAYTON180:
        return _clayton_density(theta, 1.0 - u, 1.0 - v)
    if family == CopulaFamily.CLAYTON270:
        return _clayton_density(theta, u, 1.0 - v)
    raise ValueError(f"unknown copula family code {family}")


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def ccdf_inv(spec: CopulaSpec, v, u):
    """Inverse conditional cdf: the w solving C(w|u; theta) = v.

    Independence returns v unchanged.  Accepts scalars or broadcastable
    arrays strictly inside (0, 1); boundary values raise ValueError.
    """
    theta = _require_theta(spec)
    v = _validate_unit("v", v)
    u = _validate_unit("u", u)
    out = _ccdf_inv_raw(int(spec.family), theta, v, u)
    return float(out) if out.ndim == 0 else out


def ccdf(spec: CopulaSpec, w, u):
    """Conditional cdf C(w|u; theta), the exact inverse of ccdf_inv in w."""
    theta = _require_theta(spec)
    w = _validate_unit("w", w)
    u = _validate_unit("u", u)
    if spec.family == CopulaFamily.BVN and abs(theta) == 1.0:
        raise ValueError("BVN conditional cdf is degenerate at |theta| = 1")
    out = _ccdf_raw(int(spec.family), theta, w, u)
    return float(out) if out.ndim == 0 else out


def density(spec: CopulaSpec, u, v):
    """Copula density c(u, v; theta); nonnegative, integrates to 1."""
    theta = _require_theta(spec)
    u = _validate_unit("u", u)
    v = _validate_unit("v", v)
    if spec.family == CopulaFamily.BVN and abs(theta) == 1.0:
        raise ValueError("BVN density is degenerate at |theta| = 1")
    out = _density_raw(int(spec.family), theta, u, v)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Kendall tau conversions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _leggauss(n: int):
    """Cached Legendre nodes/weights; treat the returned arrays as read-only."""
    return np.polynomial.legendre.leggauss(n)


def _debye_term(theta: float) -> float:
    """Integral of t/(e^t - 1) from 0 to theta, by doubling Gauss-Legendre."""
    a = abs(theta)
    if a > 50.0:
        # remainder of the convergent full integral; tail below 1e-20
        return math.pi * math.pi / 6.0 - (a + 1.0) * math.exp(-a) if theta > 0 else _debye_term_neg_large(theta)
    prev = None
    for n in (50, 100, 200, 400):
        x, w = _leggauss(n)
        t = 0.5 * theta * (x + 1.0)
        val = 0.5 * theta * float(np.sum(w * t / np.expm1(t)))
        if prev is not None and abs(val - prev) < 1e-13 * max(1.0, abs(val)):
            return val
        prev = val
    return prev


def _debye_term_neg_large(theta: float) -> float:
    # int_0^theta t/(e^t-1) dt = -(D(|theta|) + theta^2/2) for theta < 0
    a = abs(theta)
    return -(_debye_term(a) + 0.5 * a * a)


def theta_to_tau(family: CopulaFamily, theta: float) -> float:
    """Kendall tau implied by the family's natural parameter."""
    family = CopulaFamily(family)
    if family == CopulaFamily.INDEPENDENCE:
        return 0.0
    _check_theta(family, theta)
    th = float(theta)
    if family == CopulaFamily.BVN:
        return 2.0 / math.pi * math.asin(th)
    if family == CopulaFamily.FRANK:
        if abs(th) < FRANK_INDEP_EPS:
            return th / 9.0  # leading series term; continuous through 0
        return 1.0 - 4.0 / th + 4.0 / (th * th) * _debye_term(th)
    tau = th / (th + 2.0)
    if family in (CopulaFamily.CLAYTON90, CopulaFamily.CLAYTON270):
        return -tau
    return tau


@lru_cache(maxsize=4096)
def _frank_theta(a: float) -> float:
    """Frank theta for positive Kendall tau a; cached because the root solve
    is comparatively expensive and optimizers re-request identical values."""
    if a < 1e-8:
        return 9.0 * a  # series inverse near independence
    if a > 0.9995:
        # tail expansion tau = 1 - 4/theta + (2 pi^2/3)/theta^2 solved for theta
        d = 1.0 - a
        return (2.0 + math.sqrt(4.0 - 2.0 * math.pi * math.pi * d / 3.0)) / d
    fn = lambda th: theta_to_tau(CopulaFamily.FRANK, th) - a
    hi_br = 10.0
    while fn(hi_br) < 0.0:
        hi_br *= 2.0
    return optimize.brentq(fn, 1e-12, hi_br, xtol=1e-13, rtol=8.9e-16)


def tau_to_theta(family: CopulaFamily, tau: float) -> float:
    """Natural parameter giving Kendall tau, inverse of theta_to_tau."""
    family = CopulaFamily(family)
    if family == CopulaFamily.INDEPENDENCE:
        raise ValueError("independence copula has no parameter")
    t = float(tau)
    if t == 0.0:
        return 0.0  # degenerate parameter; every family evaluates it as independence
    if abs(t) >= 1.0:
        raise ValueError("tau must lie strictly inside (-1, 1)")
    lo, hi = TAU_INTERVALS[family]
    if not lo < t < hi:
        raise ValueError(f"{family.name} does not admit tau = {t}; admissible interval is ({lo}, {hi})")
    if family == CopulaFamily.BVN:
        return math.sin(math.pi * t / 2.0)
    if family == CopulaFamily.FRANK:
        theta = _frank_theta(abs(t))
        return theta if t > 0 else -theta
    # Clayton rotations: tau = +-theta/(theta+2)
    a = abs(t)
    return 2.0 * a / (1.0 - a)


def tau_interval(family: CopulaFamily) -> tuple[float, float]:
    """Open Kendall tau interval admitted by a parametric family."""
    family = CopulaFamily(family)
    if family == CopulaFamily.INDEPENDENCE:
        raise ValueError("independence copula admits no tau parameter")
    return TAU_INTERVALS[family]


FAMILY_NAMES = {
    "independence": CopulaFamily.INDEPENDENCE,
    "bvn": CopulaFamily.BVN,
    "frank": CopulaFamily.FRANK,
    "clayton0": CopulaFamily.CLAYTON0,
    "clayton90": CopulaFamily.CLAYTON90,
    "clayton180": CopulaFamily.CLAYTON180,
    "clayton270": CopulaFamily.CLAYTON270,
}


def family_from_name(name: str) -> CopulaFamily:
    try:
        return FAMILY_NAMES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown copula family {name!r}; expected one of {sorted(FAMILY_NAMES)}") from None
