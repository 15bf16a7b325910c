"""Timing comparison of the numba and numpy likelihood backends.

Builds a synthetic dataset, then times grid construction plus a full
joint log-likelihood evaluation for both backends on the same inputs,
for a truncated and a non-truncated model.  Used by the ``bench`` CLI
subcommand; numbers are wall-clock and machine-dependent.
"""
from __future__ import annotations

import time

from .backend import get_kernels
from .copulas import CopulaFamily, CopulaSpec
from .inference import ParamVector, _role_counts, _study_loglik_vector
from .margins import MarginKind, MarginSpec
from .simstudy import SimScenario, SizeDist, generate_dataset
from .vine import Permutation, VineModelSpec, gauss_legendre_01


def _demo_spec(truncate: bool) -> VineModelSpec:
    cond = CopulaSpec(CopulaFamily.INDEPENDENCE) if truncate else CopulaSpec(CopulaFamily.FRANK, None)
    return VineModelSpec(
        perm=Permutation(root=1, leaves=(2, 3)),
        edge_a=CopulaSpec(CopulaFamily.CLAYTON90, None),
        edge_b=CopulaSpec(CopulaFamily.CLAYTON90, None),
        edge_cond=cond,
        margins=tuple(MarginSpec(kind=MarginKind.BETA, pi=0.5, disp=0.5) for _ in range(3)),
    )


def _demo_params(truncate: bool) -> ParamVector:
    tau = (-0.5, -0.3) if truncate else (-0.5, -0.3, 0.3)
    return ParamVector(pi=(0.8, 0.7, 0.4), disp=(0.1, 0.1, 0.05), tau=tau)


def run_benchmark(nq: int = 15, n_studies: int = 20, repeats: int = 25, seed: int = 1) -> dict:
    """Median evaluation times (seconds) per backend and model shape."""
    truth_spec = _demo_spec(truncate=True)
    truth = _demo_params(truncate=True)
    scenario = SimScenario(
        n_studies=n_studies,
        true_spec=truth_spec,
        true_params=truth,
        replications=1,
        fit_specs=(truth_spec,),
        seed=seed,
        size_dist=SizeDist(),
    )
    data = generate_dataset(scenario, 0)
    grid = gauss_legendre_01(nq)
    out: dict = {"nq": nq, "n_studies": n_studies, "repeats": repeats, "timings": {}}
    for shape, truncate in (("truncated", True), ("full", False)):
        spec = _demo_spec(truncate)
        params = _demo_params(truncate)
        y, n, lch = _role_counts(data, spec)
        for backend in ("numba", "numpy"):
            try:
                kern = get_kernels(backend)
            except ImportError:
                out["timings"][f"{shape}/{backend}"] = None
                continue
            _study_loglik_vector(y, n, lch, spec, params, grid, kern)  # warm-up / JIT
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                _study_loglik_vector(y, n, lch, spec, params, grid, kern)
                times.append(time.perf_counter() - t0)
            times.sort()
            out["timings"][f"{shape}/{backend}"] = times[len(times) // 2]
    return out


def format_benchmark(result: dict) -> str:
    lines = [
        f"likelihood evaluation benchmark: nq={result['nq']}, N={result['n_studies']}, median of {result['repeats']} runs"
    ]
    for key in sorted(result["timings"]):
        t = result["timings"][key]
        lines.append(f"  {key:<22} {'unavailable' if t is None else f'{t * 1e3:8.3f} ms'}")
    pairs = [("truncated", "truncated"), ("full", "full")]
    for label, shape in pairs:
        a, b = result["timings"].get(f"{shape}/numba"), result["timings"].get(f"{shape}/numpy")
        if a and b:
            lines.append(f"  {label}: numba is {b / a:.1f}x the numpy backend")
    return "\n".join(lines) + "\n"
