"""Likelihood evaluation, maximum likelihood, model comparison, sweep.

The joint likelihood of one study is a triple Gauss-Legendre sum over the
vine-transformed grid: each term multiplies the three quadrature weights
with three binomial pmfs evaluated at the margin quantiles of the
transformed uniforms.  Everything runs in log space.  Estimation is
quasi-Newton (BFGS on a fully unconstrained packing of the parameters)
with central-difference gradients; standard errors come from the inverse
numeric Hessian mapped to the natural scale by the delta method.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit, gammaln, logit, ndtr

from .backend import get_kernels
from .copulas import CopulaFamily, CopulaSpec, tau_interval, tau_to_theta
from .margins import MarginKind, MarginSpec, StudyRecord
from .vine import DEFAULT_NQ, Permutation, QuadGrid, VineModelSpec, gauss_legendre_01

# Latent proportions and transformed uniforms are clamped to this interval
# inside the likelihood so saturated optimizer steps stay finite.
_CLAMP = 1e-12

_EDGE_NAMES = ("edge_a", "edge_b", "edge_cond")


@dataclass(frozen=True)
class ParamVector:
    """Natural-scale parameters: three means, three dispersions, edge taus.

    ``pi`` and ``disp`` are indexed by data coordinate (sensitivity,
    specificity, prevalence).  ``tau`` holds one entry per parametric edge
    in the order (edge_a, edge_b, edge_cond), skipping independence edges.
    """

    pi: tuple[float, float, float]
    disp: tuple[float, float, float]
    tau: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "pi", tuple(float(v) for v in self.pi))
        object.__setattr__(self, "disp", tuple(float(v) for v in self.disp))
        object.__setattr__(self, "tau", tuple(float(v) for v in self.tau))
        if len(self.pi) != 3 or len(self.disp) != 3:
            raise ValueError("pi and disp must each hold three values")
        if len(self.tau) > 3:
            raise ValueError("at most three edge taus exist")
        for v in self.pi:
            if not 0.0 < v < 1.0:
                raise ValueError(f"pi values must lie in (0, 1), got {v}")
        for v in self.disp:
            if not v > 0.0:
                raise ValueError(f"dispersion values must be positive, got {v}")
        for v in self.tau:
            if not -1.0 < v < 1.0:
                raise ValueError(f"tau values must lie in (-1, 1), got {v}")


@dataclass(frozen=True)
class ParamStdErr:
    """Standard errors with the same shape as ParamVector; NaN = unavailable."""

    pi: tuple[float, float, float]
    disp: tuple[float, float, float]
    tau: tuple[float, ...] = ()


@dataclass(frozen=True)
class FitResult:
    spec: VineModelSpec
    estimates: ParamVector
    se: ParamStdErr
    loglik: float
    aic: float
    n_params: int
    converged: bool
    boundary_flags: tuple[bool, ...]
    iterations: int
    study_logliks: np.ndarray | None = None
    message: str = ""


def parametric_edges(spec: VineModelSpec) -> list[tuple[str, CopulaFamily]]:
    """(edge name, family) for each non-independence edge, in edge order."""
    out = []
    for name in _EDGE_NAMES:
        fam = getattr(spec, name).family
        if fam != CopulaFamily.INDEPENDENCE:
            out.append((name, fam))
    return out


def n_model_params(spec: VineModelSpec) -> int:
    return 6 + len(parametric_edges(spec))


def _check_params(spec: VineModelSpec, params: ParamVector) -> None:
    edges = parametric_edges(spec)
    if len(params.tau) != len(edges):
        raise ValueError(
            f"model has {len(edges)} parametric edges but params carry {len(params.tau)} taus"
        )
    for (name, fam), t in zip(edges, params.tau):
        lo, hi = tau_interval(fam)
        if t != 0.0 and not lo < t < hi:
            raise ValueError(f"{name} ({fam.name}) does not admit tau = {t}")
    for m, d in zip(spec.margins, params.disp):
        if m.kind == MarginKind.BETA and not d < 1.0:
            raise ValueError(f"beta dispersion must lie in (0, 1), got {d}")


def _edge_codes(spec: VineModelSpec, params: ParamVector) -> tuple[list[int], list[float]]:
    fams, thetas = [], []
    taus = iter(params.tau)
    for name in _EDGE_NAMES:
        fam = getattr(spec, name).family
        if fam == CopulaFamily.INDEPENDENCE:
            fams.append(0)
            thetas.append(0.0)
        else:
            t = next(taus)
            fams.append(int(fam))
            thetas.append(tau_to_theta(fam, t) if t != 0.0 else 0.0)
    return fams, thetas


def _role_counts(data: list[StudyRecord], spec: VineModelSpec):
    """Counts rearranged to vine role order plus log binomial coefficients."""
    role = spec.perm.role_order
    N = len(data)
    y = np.empty((N, 3))
    n = np.empty((N, 3))
    for s, st in enumerate(data):
        triple = ((st.y1, st.n1), (st.y2, st.n2), (st.y3, st.n3))
        for pos, coord in enumerate(role):
            y[s, pos], n[s, pos] = triple[coord - 1]
    lch = (gammaln(n + 1.0) - gammaln(y + 1.0) - gammaln(n - y + 1.0)).sum(axis=1)
    return y, n, lch


def _study_loglik_vector(y, n, lch, spec: VineModelSpec, params: ParamVector, grid: QuadGrid, kernels=None):
    if kernels is None:
        kernels = get_kernels()
    fams, thetas = _edge_codes(spec, params)
    q = grid.nodes
    logw = np.log(grid.weights)
    V1, V2 = kernels.role_grids(fams[0], thetas[0], fams[1], thetas[1], fams[2], thetas[2], q)
    role = spec.perm.role_order
    arrays = []
    for pos, V in enumerate((q, V1, V2)):
        coord = role[pos] - 1
        m = spec.margins[coord]
        kind = kernels.MARGIN_NORMAL if m.kind == MarginKind.NORMAL_LOGIT else kernels.MARGIN_BETA
        X = kernels.margin_quantiles(kind, params.pi[coord], params.disp[coord], np.clip(V, _CLAMP, 1.0 - _CLAMP))
        X = np.clip(X, _CLAMP, 1.0 - _CLAMP)
        arrays.append(np.log(X))
        arrays.append(np.log1p(-X))
    return kernels.study_logliks(logw, *arrays, y, n, lch)


def study_log_lik(study: StudyRecord, spec: VineModelSpec, params: ParamVector, grid: QuadGrid) -> float:
    """Log-likelihood of one study under the vine model.

    Returns -inf (with a warning) if every quadrature term underflows.
    """
    _check_params(spec, params)
    y, n, lch = _role_counts([study], spec)
    val = float(_study_loglik_vector(y, n, lch, spec, params, grid)[0])
    if val == -np.inf:
        warnings.warn("all quadrature terms underflowed; study log-likelihood is -inf", RuntimeWarning)
    return val


def joint_nll(data: list[StudyRecord], spec: VineModelSpec, params: ParamVector, grid: QuadGrid) -> float:
    """Negative joint log-likelihood, the optimizer's objective."""
    if not data:
        raise ValueError("data must be nonempty")
    _check_params(spec, params)
    y, n, lch = _role_counts(data, spec)
    return -float(_study_loglik_vector(y, n, lch, spec, params, grid).sum())


# ---------------------------------------------------------------------------
# parameter packing
# ---------------------------------------------------------------------------

def _tau_to_z(tau: float, lo: float, hi: float) -> float:
    t = 2.0 * (tau - lo) / (hi - lo) - 1.0
    if not -1.0 < t < 1.0:
        raise ValueError(f"tau = {tau} lies outside the admissible interval ({lo}, {hi})")
    return math.atanh(t)


def _z_to_tau(z: float, lo: float, hi: float) -> float:
    t = math.tanh(z)
    tau = lo + (hi - lo) * 0.5 * (t + 1.0)
    eps = (hi - lo) * 1e-12
    return min(max(tau, lo + eps), hi - eps)


def pack(params: ParamVector, spec: VineModelSpec) -> np.ndarray:
    """Map natural parameters to an unconstrained vector.

    Means via logit; normal sigmas via log and beta gammas via logit; each
    tau via inverse tanh of its position in the family's admissible
    interval rescaled to (-1, 1), so the interval midpoint packs to 0.
    """
    _check_params(spec, params)
    out = [logit(p) for p in params.pi]
    for m, d in zip(spec.margins, params.disp):
        out.append(math.log(d) if m.kind == MarginKind.NORMAL_LOGIT else logit(d))
    for (_, fam), t in zip(parametric_edges(spec), params.tau):
        lo, hi = tau_interval(fam)
        out.append(_tau_to_z(t, lo, hi))
    return np.array(out, dtype=float)


def unpack(vec: np.ndarray, spec: VineModelSpec) -> ParamVector:
    """Inverse of pack.

    Dispersions are nudged strictly inside their domains (like taus), so a
    saturated optimizer step cannot produce gamma = 1 exactly, which would
    put the beta quantile outside its domain, or overflow exp.
    """
    vec = np.asarray(vec, dtype=float)
    edges = parametric_edges(spec)
    if vec.size != 6 + len(edges):
        raise ValueError(f"expected {6 + len(edges)} packed values, got {vec.size}")
    pi = tuple(expit(v) for v in vec[:3])
    disp = tuple(
        math.exp(min(max(v, -50.0), 50.0))
        if m.kind == MarginKind.NORMAL_LOGIT
        else min(max(expit(v), 1e-12), 1.0 - 1e-12)
        for m, v in zip(spec.margins, vec[3:6])
    )
    tau = tuple(_z_to_tau(v, *tau_interval(fam)) for (_, fam), v in zip(edges, vec[6:]))
    return ParamVector(pi=pi, disp=disp, tau=tau)


# ---------------------------------------------------------------------------
# starts
# ---------------------------------------------------------------------------

def _moment_starts(data: list[StudyRecord], spec: VineModelSpec) -> tuple[tuple, tuple]:
    """Method-of-moments univariate starting values for pi and disp."""
    pi, disp = [], []
    for coord in range(3):
        y = np.array([(st.y1, st.y2, st.y3)[coord] for st in data], dtype=float)
        n = np.array([(st.n1, st.n2, st.n3)[coord] for st in data], dtype=float)
        p = (y + 0.5) / (n + 1.0)  # continuity-corrected study proportions
        mean = float(np.mean(p))
        var = float(np.var(p))
        m = spec.margins[coord]
        if m.kind == MarginKind.NORMAL_LOGIT:
            lp = logit(p)
            pi.append(float(expit(np.mean(lp))))
            disp.append(float(min(max(np.std(lp), 0.05), 5.0)))
        else:
            pi.append(min(max(mean, 0.01), 0.99))
            g = var / (mean * (1.0 - mean)) if 0.0 < mean < 1.0 else 0.05
            disp.append(float(min(max(g, 0.005), 0.8)))
    return tuple(pi), tuple(disp)


def _tau_start_values(fam: CopulaFamily) -> list[float]:
    lo, hi = tau_interval(fam)
    raw = [-0.5, 0.0, 0.5]
    if lo == 0.0:  # positive-dependence Clayton rotations
        raw = [0.2, 0.5]
    elif hi == 0.0:
        raw = [-0.5, -0.2]
    return [t for t in raw if lo < t < hi or t == 0.0]


def default_starts(data: list[StudyRecord], spec: VineModelSpec) -> list[ParamVector]:
    """Moment starts for the univariate parameters crossed with tau ladders."""
    pi, disp = _moment_starts(data, spec)
    edges = parametric_edges(spec)
    if not edges:
        return [ParamVector(pi=pi, disp=disp)]
    ladders = [_tau_start_values(fam) for _, fam in edges]
    count = max(len(l) for l in ladders)
    starts = []
    for k in range(count):
        tau = tuple(ladder[k % len(ladder)] for ladder in ladders)
        starts.append(ParamVector(pi=pi, disp=disp, tau=tau))
    return starts


# ---------------------------------------------------------------------------
# quasi-Newton optimization
# ---------------------------------------------------------------------------

def _num_grad(f, x: np.ndarray, fx: float) -> np.ndarray:
    """Central-difference gradient, one-sided where a perturbation blows up."""
    g = np.empty(x.size)
    for i in range(x.size):
        h = 1e-5 * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp, fm = f(xp), f(xm)
        if math.isfinite(fp) and math.isfinite(fm):
            g[i] = (fp - fm) / (2.0 * h)
        elif math.isfinite(fp):
            g[i] = (fp - fx) / h
        elif math.isfinite(fm):
            g[i] = (fx - fm) / h
        else:
            g[i] = np.nan
    return g


def _bfgs(f, x0: np.ndarray, tol: float, gtol: float, max_iter: int):
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    fx = f(x)
    if not math.isfinite(fx):
        return x, fx, 0, False, "objective not finite at start"
    g = _num_grad(f, x, fx)
    if np.any(~np.isfinite(g)):
        return x, fx, 0, False, "gradient not finite at start"
    if np.max(np.abs(g)) < gtol:
        return x, fx, 0, True, ""
    H = np.eye(n)
    iterations = 0
    message = "maximum iterations reached"
    converged = False
    while iterations < max_iter:
        p = -H @ g
        gTp = float(g @ p)
        if not np.all(np.isfinite(p)) or gTp >= 0.0:
            H = np.eye(n)
            p = -g
            gTp = float(g @ p)
        alpha = 1.0
        fn = np.inf
        for _ in range(60):
            xn = x + alpha * p
            fn = f(xn)
            if math.isfinite(fn) and fn <= fx + 1e-4 * alpha * gTp:
                break
            alpha *= 0.5
        else:
            message = "line search failed"
            break
        gn = _num_grad(f, xn, fn)
        if np.any(~np.isfinite(gn)):
            message = "gradient not finite"
            break
        s = xn - x
        yv = gn - g
        sy = float(s @ yv)
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(yv)):
            rho = 1.0 / sy
            Hy = H @ yv
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + rho * rho * float(yv @ Hy) * np.outer(s, s) + rho * np.outer(s, s)
        fprev = fx
        x, fx, g = xn, fn, gn
        iterations += 1
        rel = abs(fprev - fx) / max(1.0, abs(fx))
        if rel < tol and np.max(np.abs(g)) < gtol:
            converged = True
            message = ""
            break
    return x, fx, iterations, converged, message


def _num_hessian(f, x: np.ndarray) -> np.ndarray:
    n = x.size
    h = np.array([1e-4 * max(1.0, abs(v)) for v in x])
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / (h[i] * h[i])
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def _natural_scale_derivs(x: np.ndarray, spec: VineModelSpec) -> np.ndarray:
    """d(natural)/d(packed) for the componentwise delta method."""
    params = unpack(x, spec)
    d = [p * (1.0 - p) for p in params.pi]
    for m, v in zip(spec.margins, params.disp):
        d.append(v if m.kind == MarginKind.NORMAL_LOGIT else v * (1.0 - v))
    for (_, fam), t in zip(parametric_edges(spec), params.tau):
        lo, hi = tau_interval(fam)
        pos = 2.0 * (t - lo) / (hi - lo) - 1.0
        d.append((hi - lo) * 0.5 * (1.0 - pos * pos))
    return np.abs(np.array(d))


def _standard_errors(f, x: np.ndarray, spec: VineModelSpec) -> ParamStdErr:
    k = x.size
    nan = (float("nan"),)
    try:
        H = _num_hessian(f, x)
        np.linalg.cholesky(H)  # positive definiteness check
        cov = np.linalg.inv(H)
        se_packed = np.sqrt(np.diag(cov))
        se_nat = _natural_scale_derivs(x, spec) * se_packed
    except np.linalg.LinAlgError:
        se_nat = np.full(k, np.nan)
    return ParamStdErr(pi=tuple(se_nat[:3]), disp=tuple(se_nat[3:6]), tau=tuple(se_nat[6:]))


def _boundary_flags(params: ParamVector, spec: VineModelSpec) -> tuple[bool, ...]:
    flags = []
    for (_, fam), t in zip(parametric_edges(spec), params.tau):
        lo, hi = tau_interval(fam)
        pos = 2.0 * (t - lo) / (hi - lo) - 1.0
        flags.append(abs(pos) > 0.95)
    return tuple(flags)


def fit(
    data: list[StudyRecord],
    spec: VineModelSpec,
    nq: int = DEFAULT_NQ,
    tol: float = 1e-8,
    gtol: float = 1e-5,
    max_iter: int = 500,
    starts: list[ParamVector] | None = None,
) -> FitResult:
    """Maximum-likelihood fit of a vine model specification.

    Runs BFGS from each start (default: moment starts with a ladder of tau
    values) and keeps the best optimum.  Non-convergence is reported in the
    result, never raised.  Boundary flags mark taus whose position exceeds
    95 percent of the admissible interval; a flagged conditional edge is
    usually a hint to refit with truncation.
    """
    if not data:
        raise ValueError("data must be nonempty")
    grid = gauss_legendre_01(nq)
    kernels = get_kernels()
    y, n, lch = _role_counts(data, spec)
    if starts is None:
        starts = default_starts(data, spec)
    if not starts:
        raise ValueError("at least one start is required")

    def objective(xvec: np.ndarray) -> float:
        try:
            params = unpack(xvec, spec)
            return -float(_study_loglik_vector(y, n, lch, spec, params, grid, kernels).sum())
        except (ValueError, ArithmeticError):
            return np.inf

    best = None
    for start in starts:
        x0 = pack(start, spec)
        x, fx, iters, conv, msg = _bfgs(objective, x0, tol=tol, gtol=gtol, max_iter=max_iter)
        cand = (x, fx, iters, conv, msg)
        if best is None or fx < best[1]:
            best = cand
    x, fx, iters, conv, msg = best
    params = unpack(x, spec)
    se = _standard_errors(objective, x, spec)
    lls = _study_loglik_vector(y, n, lch, spec, params, grid, kernels)
    loglik = float(lls.sum())
    k = n_model_params(spec)
    return FitResult(
        spec=spec,
        estimates=params,
        se=se,
        loglik=loglik,
        aic=-2.0 * loglik + 2.0 * k,
        n_params=k,
        converged=conv,
        boundary_flags=_boundary_flags(params, spec),
        iterations=iters,
        study_logliks=lls,
        message=msg,
    )


def aic(fit_result: FitResult) -> float:
    """Akaike information criterion: -2 loglik + 2 (number of parameters)."""
    return -2.0 * fit_result.loglik + 2.0 * fit_result.n_params


# ---------------------------------------------------------------------------
# Vuong comparison and model sweep
# ---------------------------------------------------------------------------

def vuong(fit1: FitResult, fit2: FitResult, adjusted: bool = False) -> tuple[float, float]:
    """Vuong closeness test of two non-nested fits on the same data.

    D_i is the per-study log-likelihood difference (model 2 minus model 1),
    z0 = sqrt(N) Dbar / s with s the sample standard deviation of the D_i;
    the adjusted variant penalizes Dbar by (k2 - k1)/N.  Returns (z0, p)
    with a two-sided normal p value; both are NaN when s = 0 (undefined).
    """
    if fit1.study_logliks is None or fit2.study_logliks is None:
        raise ValueError("both fits must carry per-study log-likelihoods")
    d1, d2 = np.asarray(fit1.study_logliks), np.asarray(fit2.study_logliks)
    if d1.shape != d2.shape:
        raise ValueError(f"fits cover different study counts: {d1.size} vs {d2.size}")
    N = d1.size
    if N < 2:
        raise ValueError("Vuong needs at least two studies")
    D = d2 - d1
    dbar = float(np.mean(D))
    s = math.sqrt(float(np.sum((D - dbar) ** 2)) / (N - 1))
    if adjusted:
        dbar -= (fit2.n_params - fit1.n_params) / N
    if s == 0.0:
        return float("nan"), float("nan")
    z0 = math.sqrt(N) * dbar / s
    p = 2.0 * float(ndtr(-abs(z0)))
    return z0, p


def _sweep_edge_families(entry) -> tuple[CopulaFamily, CopulaFamily, CopulaFamily]:
    if isinstance(entry, (tuple, list)):
        fams = tuple(CopulaFamily(f) for f in entry)
        if len(fams) == 2:
            return fams[0], fams[1], fams[0]
        if len(fams) == 3:
            return fams
        raise ValueError("edge family entries must have 1, 2 or 3 members")
    fam = CopulaFamily(entry)
    return fam, fam, fam


def build_model_spec(
    perm: Permutation,
    families,
    margin_kind: MarginKind,
    truncate: bool,
) -> VineModelSpec:
    """Assemble a structural VineModelSpec from sweep coordinates.

    ``families`` is a single family (all edges), a pair (edge_a, edge_b
    with the conditional edge following edge_a), or an explicit triple.
    Truncation replaces the conditional edge with independence.
    """
    fa, fb, fc = _sweep_edge_families(families)
    if truncate:
        fc = CopulaFamily.INDEPENDENCE
    margins = tuple(MarginSpec(kind=margin_kind, pi=0.5, disp=0.5) for _ in range(3))
    return VineModelSpec(
        perm=perm,
        edge_a=CopulaSpec(fa) if fa == CopulaFamily.INDEPENDENCE else CopulaSpec(fa, None),
        edge_b=CopulaSpec(fb) if fb == CopulaFamily.INDEPENDENCE else CopulaSpec(fb, None),
        edge_cond=CopulaSpec(fc) if fc == CopulaFamily.INDEPENDENCE else CopulaSpec(fc, None),
        margins=margins,
    )


def sweep(
    data: list[StudyRecord],
    families: list,
    margins: list[MarginKind],
    permutations: list[Permutation],
    truncate: bool = False,
    rank_by: str = "aic",
    **options,
) -> list[FitResult]:
    """Fit every family x margin x permutation combination and rank the fits.

    Ranking is by AIC ascending (or log-likelihood descending when
    ``rank_by='loglik'``), ties broken by fewer parameters and then by
    enumeration order; models whose fit raised are kept with diagnostics
    and ranked last.
    """
    if not families or not margins or not permutations:
        raise ValueError("families, margins and permutations must be nonempty")
    if rank_by not in ("aic", "loglik"):
        raise ValueError(f"rank_by must be 'aic' or 'loglik', got {rank_by!r}")
    results = []
    for fam_entry in families:
        for kind in margins:
            for perm in permutations:
                spec = build_model_spec(perm, fam_entry, MarginKind(kind), truncate)
                try:
                    res = fit(data, spec, **options)
                except Exception as exc:  # failures are data, not crashes
                    res = FitResult(
                        spec=spec,
                        estimates=ParamVector(pi=(0.5, 0.5, 0.5), disp=(0.5, 0.5, 0.5), tau=tuple(0.0 for _ in parametric_edges(spec))),
                        se=ParamStdErr(pi=(np.nan,) * 3, disp=(np.nan,) * 3, tau=(np.nan,) * len(parametric_edges(spec))),
                        loglik=float("nan"),
                        aic=float("nan"),
                        n_params=n_model_params(spec),
                        converged=False,
                        boundary_flags=(False,) * len(parametric_edges(spec)),
                        iterations=0,
                        study_logliks=None,
                        message=f"fit failed: {exc!r}",
                    )
                results.append(res)

    def key(idx_res):
        idx, res = idx_res
        failed = not math.isfinite(res.aic)
        if rank_by == "aic":
            score = res.aic if not failed else np.inf
        else:
            score = -res.loglik if math.isfinite(res.loglik) else np.inf
        return (1 if failed else 0, score, res.n_params, idx)

    return [res for _, res in sorted(enumerate(results), key=key)]
