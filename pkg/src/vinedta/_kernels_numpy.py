"""Vectorized numpy/scipy implementations of the likelihood hot path.

Reference backend: every function here has a compiled twin in
``_kernels_numba`` with the same name and contract, and the two must agree
to near machine precision.  The triple quadrature sum is evaluated in log
space with nested log-sum-exp; when the conditional edge is independence
the third coordinate's grid collapses from nq^3 to nq^2 and the sum
factorizes accordingly.
"""
from __future__ import annotations

import numpy as np
from scipy.special import betaincinv, expit, logit, logsumexp, ndtri

from .copulas import CopulaFamily, _ccdf_inv_raw

backend_name = "numpy"

MARGIN_NORMAL = 0
MARGIN_BETA = 1


def role_grids(fam_a, th_a, fam_b, th_b, fam_c, th_c, q):
    """Transformed-uniform grids in vine role order.

    V1[i, j] is the leaf1 uniform when the root sits at node i and leaf1's
    own uniform at node j.  For a truncated vine (fam_c independence) V2 is
    (nq, nq) with V2[i, k] the leaf2 uniform; otherwise V2 is (nq, nq, nq)
    indexed by (root, leaf1, leaf2) nodes.
    """
    q = np.asarray(q, dtype=float)
    cond = q[:, None]
    V1 = _ccdf_inv_raw(fam_a, th_a, q[None, :], cond)
    if fam_c == int(CopulaFamily.INDEPENDENCE):
        V2 = _ccdf_inv_raw(fam_b, th_b, q[None, :], cond)
    else:
        inner = _ccdf_inv_raw(fam_c, th_c, q[None, :], cond)  # (j, k)
        V2 = _ccdf_inv_raw(fam_b, th_b, inner[None, :, :], q[:, None, None])
    return V1, V2


def margin_quantiles(kind, pi, disp, v):
    """Latent-proportion quantiles applied elementwise to a uniform array."""
    v = np.asarray(v, dtype=float)
    if kind == MARGIN_NORMAL:
        return expit(logit(pi) + disp * ndtri(v))
    a = pi * (1.0 / disp - 1.0)
    b = (1.0 - pi) * (1.0 / disp - 1.0)
    return betaincinv(a, b, v)


def study_logliks(logw, lXr, l1Xr, lX1, l1X1, lX2, l1X2, y, n, lch):
    """Per-study log-likelihoods by nested log-sum-exp over the grid.

    ``lX*``/``l1X*`` are log(x) and log(1-x) of the latent proportions on
    the role grids; ``y``/``n`` are (N, 3) counts in role order and ``lch``
    the per-study sum of log binomial coefficients.
    """
    N = y.shape[0]
    out = np.empty(N)
    truncated = lX2.ndim == 2
    for s in range(N):
        ar = logw + y[s, 0] * lXr + (n[s, 0] - y[s, 0]) * l1Xr
        b = logw[None, :] + y[s, 1] * lX1 + (n[s, 1] - y[s, 1]) * l1X1
        if truncated:
            c = logw[None, :] + y[s, 2] * lX2 + (n[s, 2] - y[s, 2]) * l1X2
            t = ar + logsumexp(b, axis=1) + logsumexp(c, axis=1)
        else:
            c = logw[None, None, :] + y[s, 2] * lX2 + (n[s, 2] - y[s, 2]) * l1X2
            t = ar + logsumexp(b + logsumexp(c, axis=2), axis=1)
        out[s] = logsumexp(t) + lch[s]
    return out
