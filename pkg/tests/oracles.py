"""Independent reference implementations used as test oracles.

Everything here is coded directly against scipy/numpy primitives, not
against the package under test, so agreement between the two is evidence
rather than tautology.  The implementations favor clarity over speed.
"""
import numpy as np
from scipy import optimize, stats
from scipy.special import expit, logit, logsumexp, ndtri


def gauss_legendre_unit(nq):
    x, w = np.polynomial.legendre.leggauss(nq)
    return 0.5 * (x + 1.0), 0.5 * w


def univariate_mixed_loglik(y, n, kind, pi, disp, nq):
    """1-D random-effects binomial log-likelihood by direct quadrature.

    kind 'normal': success probability expit(logit(pi) + disp * ndtri(v));
    kind 'beta': Beta(pi, disp) quantile at v, shapes a = pi (1/disp - 1),
    b = (1 - pi)(1/disp - 1).
    """
    v, w = gauss_legendre_unit(nq)
    if kind == "normal":
        p = expit(logit(pi) + disp * ndtri(v))
    else:
        c = 1.0 / disp - 1.0
        p = stats.beta.ppf(v, pi * c, (1.0 - pi) * c)
    return float(logsumexp(np.log(w) + stats.binom.logpmf(y, n, p)))


def tvn_mixed_loglik(data, mu, sd, rho12, rho13, rho23, nq=15):
    """Trivariate-normal random-effects likelihood by direct quadrature.

    The latent vector is N(mu, D R D) with D = diag(sd); integration uses
    the Cholesky substitution t = mu + D L z over a tensor Gauss-Legendre
    grid in the probability scale, so the normal density cancels exactly.
    """
    v, w = gauss_legendre_unit(nq)
    lw = np.log(w)
    z = ndtri(v)
    R = np.array([[1.0, rho12, rho13], [rho12, 1.0, rho23], [rho13, rho23, 1.0]])
    L = np.linalg.cholesky(R)
    Z = np.array(np.meshgrid(z, z, z, indexing="ij")).reshape(3, -1)
    T = np.asarray(mu, float)[:, None] + np.asarray(sd, float)[:, None] * (L @ Z)
    P = expit(T)
    LW = (lw[:, None, None] + lw[None, :, None] + lw[None, None, :]).ravel()
    total = 0.0
    for r in data:
        terms = LW.copy()
        for j, (y, n) in enumerate(((r.y1, r.n1), (r.y2, r.n2), (r.y3, r.n3))):
            terms = terms + stats.binom.logpmf(y, n, P[j])
        total += logsumexp(terms)
    return float(total)


def maximize_tvn_loglik(data, nq=15, starts=None):
    """Best TVN mixed-model log-likelihood over (mu, sd, correlations).

    Correlations are parametrized as (rho12, rho13, rho23|1) through tanh,
    with rho23 = rho23|1 sqrt((1-rho12^2)(1-rho13^2)) + rho12 rho13, which
    keeps the correlation matrix positive definite by construction.
    """
    def unpack(x):
        mu = x[:3]
        sd = np.exp(x[3:6])
        r12, r13, r23g1 = np.tanh(x[6:])
        rho23 = r23g1 * np.sqrt((1.0 - r12**2) * (1.0 - r13**2)) + r12 * r13
        return mu, sd, r12, r13, rho23

    def nll(x):
        try:
            mu, sd, r12, r13, r23 = unpack(x)
            return -tvn_mixed_loglik(data, mu, sd, r12, r13, r23, nq=nq)
        except np.linalg.LinAlgError:
            return np.inf

    if starts is None:
        starts = [
            np.array([logit(0.8), logit(0.85), logit(0.35), 0.0, 0.0, 0.0, 0.3, -0.2, 0.1]),
            np.array([logit(0.7), logit(0.8), logit(0.4), -0.5, -0.5, -0.5, 0.0, 0.0, 0.0]),
        ]
    best = np.inf
    for x0 in starts:
        res = optimize.minimize(
            nll, x0, method="L-BFGS-B", options={"maxiter": 500, "ftol": 1e-12, "gtol": 1e-8}
        )
        best = min(best, res.fun)
    return -float(best)


def copula_total_mass(density, nq=40, corner_levels=24):
    """Integral of a bivariate density over the unit square.

    Composite tensor Gauss-Legendre on a dyadically graded partition: panel
    edges accumulate geometrically toward 0 and 1 so corner-concentrated
    (tail-dependent) densities are resolved; a single global panel is not
    enough for those.
    """
    breaks = sorted(
        {0.0, 1.0}
        | {2.0**-k for k in range(1, corner_levels + 1)}
        | {1.0 - 2.0**-k for k in range(1, corner_levels + 1)}
    )
    x, w = np.polynomial.legendre.leggauss(nq)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        h = 0.5 * (b - a)
        nodes.append(a + h * (x + 1.0))
        weights.append(h * w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    U, V = np.meshgrid(nodes, nodes, indexing="ij")
    W = np.outer(weights, weights)
    return float(np.sum(W * density(U, V)))


def five_point_gradient(f, x, h=1e-4):
    """Fourth-order central finite-difference gradient."""
    x = np.asarray(x, float)
    g = np.empty_like(x)
    for i in range(x.size):
        hi = h * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = hi
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12.0 * hi)
    return g
