"""Selection of the likelihood kernel backend.

Two interchangeable implementations exist: compiled numba kernels (the
default when numba imports cleanly) and a vectorized numpy/scipy fallback.
Set the environment variable ``VINEDTA_BACKEND`` to ``numpy`` or ``numba``
to force one; anything else (or unset) means auto-detect.  The choice is
re-read on every call so tests can flip it at runtime.
"""
from __future__ import annotations

import os

ENV_VAR = "VINEDTA_BACKEND"

_loaded: dict[str, object] = {}


def get_kernels(name: str | None = None):
    """Return the kernel module (role_grids, margin_quantiles, study_logliks)."""
    requested = (name or os.environ.get(ENV_VAR, "")).strip().lower() or "auto"
    mod = _loaded.get(requested)
    if mod is not None:
        return mod
    if requested == "numpy":
        from . import _kernels_numpy as mod
    elif requested == "numba":
        from . import _kernels_numba as mod
    elif requested == "auto":
        try:
            from . import _kernels_numba as mod
        except ImportError:
            from . import _kernels_numpy as mod
    else:
        raise ValueError(f"unknown backend {requested!r}; expected 'numpy', 'numba' or unset")
    _loaded[requested] = mod
    return mod


def active_backend() -> str:
    """Name of the backend the current environment resolves to."""
    return get_kernels().backend_name
