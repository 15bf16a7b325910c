"""Deterministic model/parameter/data points for quadrature stability checks.

Each point couples a vine model specification with a parameter vector drawn
from plausible diagnostic-accuracy ranges and an 8-study dataset whose counts
are the rounded expected outcomes under the point's own means, so every
dataset is typical for its parameters rather than adversarial.
"""
import numpy as np

from vinedta.copulas import CopulaFamily, CopulaSpec
from vinedta.inference import ParamVector
from vinedta.margins import MarginKind, MarginSpec, StudyRecord
from vinedta.vine import Permutation, VineModelSpec

_NEGATIVE_ONLY = (CopulaFamily.CLAYTON90, CopulaFamily.CLAYTON270)


def stability_points(count=50, seed=20260822):
    """(data, spec, params) triples cycling families, margin kinds, truncation."""
    fams = (CopulaFamily.BVN, CopulaFamily.FRANK, CopulaFamily.CLAYTON90, CopulaFamily.CLAYTON270)
    rng = np.random.default_rng(seed)
    points = []
    for i in range(count):
        fam = fams[i % 4]
        kind = MarginKind.BETA if i % 2 == 0 else MarginKind.NORMAL_LOGIT
        truncate = (i // 2) % 2 == 0
        pi = (rng.uniform(0.65, 0.9), rng.uniform(0.7, 0.9), rng.uniform(0.1, 0.45))
        lo, hi = (0.05, 0.13) if kind == MarginKind.BETA else (0.45, 0.8)
        disp = tuple(rng.uniform(lo, hi, size=3))
        n_tau = 2 if truncate else 3
        mag = rng.uniform(0.02, 0.5, size=n_tau)
        if not truncate:
            mag[2] = min(mag[2], 0.3)  # conditional dependence stays moderate
        sign = -np.ones(n_tau) if fam in _NEGATIVE_ONLY else rng.choice([-1.0, 1.0], size=n_tau)
        tau = tuple(sign * mag)
        edge_cond = CopulaSpec(CopulaFamily.INDEPENDENCE) if truncate else CopulaSpec(fam, None)
        spec = VineModelSpec(
            Permutation(1, (2, 3)),
            CopulaSpec(fam, None),
            CopulaSpec(fam, None),
            edge_cond,
            tuple(MarginSpec(kind, 0.5, 0.5) for _ in range(3)),
        )
        sizes = rng.integers(60, 151, size=8)
        data = []
        for n in sizes:
            n = int(n)
            n1 = min(max(int(round(n * pi[2])), 1), n - 1)
            n2 = n - n1
            y1 = int(round(n1 * pi[0]))
            y2 = int(round(n2 * pi[1]))
            data.append(StudyRecord(y1, n1, y2, n2, n1, n))
        points.append((data, spec, ParamVector(pi=pi, disp=disp, tau=tau)))
    return points
