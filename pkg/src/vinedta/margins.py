"""Random-effects margins and the binomial observation model.

Two marginal families for the latent study-level proportions: a normal
distribution on the logit scale (mean logit(pi), sd sigma) and a beta
distribution in the mean/dispersion parametrization Beta(pi, gamma) with
shapes alpha = pi(1/gamma - 1), beta = (1 - pi)(1/gamma - 1).  Observed
counts are binomial given the latent proportion.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy.special import betaincinv, expit, gammaln, logit, ndtri


class MarginKind(str, Enum):
    NORMAL_LOGIT = "normal"
    BETA = "beta"


@dataclass(frozen=True)
class MarginSpec:
    """Marginal law of one latent proportion.

    ``disp`` is the logit-scale standard deviation for NORMAL_LOGIT and the
    dispersion gamma in (0, 1) for BETA.
    """

    kind: MarginKind
    pi: float
    disp: float

    def __post_init__(self):
        kind = MarginKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not 0.0 < self.pi < 1.0:
            raise ValueError(f"pi must lie in (0, 1), got {self.pi}")
        if kind == MarginKind.NORMAL_LOGIT:
            if not self.disp > 0.0:
                raise ValueError(f"sigma must be positive, got {self.disp}")
        else:
            if not 0.0 < self.disp < 1.0:
                raise ValueError(f"gamma must lie in (0, 1), got {self.disp}")


@dataclass(frozen=True)
class StudyRecord:
    """One study's 2x2 table in count form.

    y1/n1: true positives out of diseased, y2/n2: true negatives out of
    non-diseased, y3/n3: diseased out of total.  The redundancy y3 = n1 and
    n3 = n1 + n2 is enforced so the three binomials stay consistent.
    """

    y1: int
    n1: int
    y2: int
    n2: int
    y3: int
    n3: int

    def __post_init__(self):
        for name in ("y1", "n1", "y2", "n2", "y3", "n3"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValueError(f"{name} must be an integer count, got {v!r}")
            object.__setattr__(self, name, int(v))
        for y, n in ((self.y1, self.n1), (self.y2, self.n2), (self.y3, self.n3)):
            if y < 0 or n < 0 or y > n:
                raise ValueError(f"counts must satisfy 0 <= y <= n, got y={y}, n={n}")
        if self.y3 != self.n1:
            raise ValueError(f"diseased count y3={self.y3} must equal the diseased denominator n1={self.n1}")
        if self.n3 != self.n1 + self.n2:
            raise ValueError(f"study size n3={self.n3} must equal n1+n2={self.n1 + self.n2}")


def beta_shapes(pi: float, gamma: float) -> tuple[float, float]:
    """Shape parameters (alpha, beta) of Beta(pi, gamma).

    pi = alpha/(alpha+beta) is the mean and gamma = 1/(alpha+beta+1) the
    dispersion, so alpha = pi(1/gamma - 1) and beta = (1-pi)(1/gamma - 1).
    """
    if not 0.0 < pi < 1.0 or not 0.0 < gamma < 1.0:
        raise ValueError("pi and gamma must lie strictly inside (0, 1)")
    s = 1.0 / gamma - 1.0
    return pi * s, (1.0 - pi) * s


def latent_quantile(margin: MarginSpec, u):
    """Quantile of the latent proportion at probability u in (0, 1)."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("u must lie strictly inside (0, 1)")
    if margin.kind == MarginKind.NORMAL_LOGIT:
        out = expit(logit(margin.pi) + margin.disp * ndtri(u))
    else:
        a, b = beta_shapes(margin.pi, margin.disp)
        out = betaincinv(a, b, u)
    return float(out) if out.ndim == 0 else out


def binom_log_pmf(y, n, p):
    """Log binomial pmf via log-gamma, with the 0^0 = 1 boundary conventions."""
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(y < 0) or np.any(y > n):
        raise ValueError("y must satisfy 0 <= y <= n")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("p must lie in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.where(y > 0, y * np.log(p), 0.0)
        log1mp = np.where(n - y > 0, (n - y) * np.log1p(-p), 0.0)
    out = gammaln(n + 1.0) - gammaln(y + 1.0) - gammaln(n - y + 1.0) + logp + log1mp
    return float(out) if out.ndim == 0 else out
