"""Trivariate vine copula mixed-effect models for diagnostic test accuracy.

Fits joint models of sensitivity, specificity and prevalence across
studies: binomial counts within studies, a C-vine copula with normal or
beta margins between studies.  The classical trivariate GLMM is the
special case of BVN copula blocks with normal margins.  Includes model
comparison (AIC, Vuong), a model-space sweep, and a simulation harness.
"""
from .backend import active_backend, get_kernels
from .copulas import (
    CopulaFamily,
    CopulaSpec,
    ccdf,
    ccdf_inv,
    density,
    family_from_name,
    tau_interval,
    tau_to_theta,
    theta_to_tau,
)
from .inference import (
    FitResult,
    ParamStdErr,
    ParamVector,
    aic,
    build_model_spec,
    fit,
    joint_nll,
    pack,
    study_log_lik,
    sweep,
    unpack,
    vuong,
)
from .margins import MarginKind, MarginSpec, StudyRecord, beta_shapes, binom_log_pmf, latent_quantile
from .simstudy import (
    SimReport,
    SimScenario,
    SizeDist,
    draw_study_size,
    draw_study_sizes,
    generate_dataset,
    run_study,
)
from .vine import (
    DEFAULT_NQ,
    Permutation,
    QuadGrid,
    VineModelSpec,
    empirical_tau,
    enumerate_permutations,
    gauss_legendre_01,
    simulate_vine,
    vine_transform,
)

__version__ = "0.1.0"

__all__ = [
    "CopulaFamily",
    "CopulaSpec",
    "DEFAULT_NQ",
    "FitResult",
    "MarginKind",
    "MarginSpec",
    "ParamStdErr",
    "ParamVector",
    "Permutation",
    "QuadGrid",
    "SimReport",
    "SimScenario",
    "SizeDist",
    "StudyRecord",
    "VineModelSpec",
    "active_backend",
    "aic",
    "beta_shapes",
    "binom_log_pmf",
    "build_model_spec",
    "ccdf",
    "ccdf_inv",
    "density",
    "draw_study_size",
    "draw_study_sizes",
    "empirical_tau",
    "enumerate_permutations",
    "family_from_name",
    "fit",
    "gauss_legendre_01",
    "generate_dataset",
    "get_kernels",
    "joint_nll",
    "latent_quantile",
    "pack",
    "run_study",
    "simulate_vine",
    "study_log_lik",
    "sweep",
    "tau_interval",
    "tau_to_theta",
    "theta_to_tau",
    "unpack",
    "vine_transform",
    "vuong",
]
