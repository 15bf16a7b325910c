"""Result serialization and text rendering.

Machine-readable documents are JSON with sorted keys, no timestamps, and
non-finite numbers mapped to null, so identical runs produce byte-identical
bytes.  Text reports round to 6 significant digits and lay fit tables out
with parameters as rows and models as columns, followed by AIC/loglik rows
and a Vuong block against the configured baseline.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .inference import FitResult
from .margins import MarginKind
from .simstudy import SimReport
from .vine import VineModelSpec

SCHEMA_FIT = "vinedta/fit/v1"
SCHEMA_SIM = "vinedta/sim/v1"

_FAMILY_SHORT = {
    "INDEPENDENCE": "ind",
    "BVN": "bvn",
    "FRANK": "frank",
    "CLAYTON0": "clayton0",
    "CLAYTON90": "clayton90",
    "CLAYTON180": "clayton180",
    "CLAYTON270": "clayton270",
}


def model_label(spec: VineModelSpec) -> str:
    fams = "/".join(_FAMILY_SHORT[getattr(spec, e).family.name] for e in ("edge_a", "edge_b", "edge_cond"))
    kinds = {m.kind for m in spec.margins}
    margin = spec.margins[0].kind.value if len(kinds) == 1 else "+".join(m.kind.value for m in spec.margins)
    return f"{fams}:{margin}:p{spec.perm.root}"


def spec_to_dict(spec: VineModelSpec) -> dict:
    return {
        "perm": {"root": spec.perm.root, "leaves": list(spec.perm.leaves)},
        "edge_a": _FAMILY_SHORT[spec.edge_a.family.name],
        "edge_b": _FAMILY_SHORT[spec.edge_b.family.name],
        "edge_cond": _FAMILY_SHORT[spec.edge_cond.family.name],
        "margins": [m.kind.value for m in spec.margins],
        "truncated": spec.truncated,
    }


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def fit_result_to_dict(res: FitResult, vuong_entry: dict | None = None) -> dict:
    return {
        "label": model_label(res.spec),
        "spec": spec_to_dict(res.spec),
        "estimates": {
            "pi": [_num(v) for v in res.estimates.pi],
            "disp": [_num(v) for v in res.estimates.disp],
            "tau": [_num(v) for v in res.estimates.tau],
        },
        "se": {
            "pi": [_num(v) for v in res.se.pi],
            "disp": [_num(v) for v in res.se.disp],
            "tau": [_num(v) for v in res.se.tau],
        },
        "loglik": _num(res.loglik),
        "aic": _num(res.aic),
        "n_params": res.n_params,
        "converged": bool(res.converged),
        "boundary_flags": [bool(b) for b in res.boundary_flags],
        "iterations": int(res.iterations),
        "message": res.message,
        "vuong": vuong_entry,
    }


def sim_report_to_dict(report: SimReport) -> dict:
    return {
        "n_studies": report.n_studies,
        "replications": report.replications,
        "seed": report.seed,
        "fits": [
            {
                "label": model_label(f.spec),
                "spec": spec_to_dict(f.spec),
                "n_used": f.n_used,
                "n_excluded": f.n_excluded,
                "n_se_available": f.n_se_available,
                "params": [
                    {
                        "name": p.name,
                        "truth": _num(p.truth),
                        "bias": _num(p.bias),
                        "sd": _num(p.sd),
                        "rmse": _num(p.rmse),
                        "sqrt_mean_theoretical_variance": _num(p.sqrt_mean_theoretical_variance),
                    }
                    for p in f.params
                ],
            }
            for f in report.fits
        ],
    }


def json_bytes(doc: dict) -> bytes:
    """Deterministic JSON bytes: sorted keys, stable separators, trailing LF."""
    return (json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# text rendering
# ---------------------------------------------------------------------------

def _fmt(v, na: str = "n/a") -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return na
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _est_se(e, s) -> str:
    if s is None or (isinstance(s, float) and not math.isfinite(s)):
        return f"{_fmt(e)} (n/a)"
    return f"{_fmt(e)} ({_fmt(s)})"


def _disp_label(res: FitResult, j: int) -> str:
    return "sigma" if res.spec.margins[j].kind == MarginKind.NORMAL_LOGIT else "gamma"


def render_fit_table(results: list[FitResult], vuongs: list[dict | None], baseline_label: str | None) -> str:
    """Aligned text table: parameter rows, AIC/loglik rows, Vuong block."""
    headers = ["parameter"] + [model_label(r.spec) for r in results]
    rows: list[list[str]] = []

    def add(label: str, cells: list[str]):
        rows.append([label] + cells)

    for j in range(3):
        add(f"pi{j + 1}", [_est_se(r.estimates.pi[j], r.se.pi[j]) for r in results])
    for j in range(3):
        labels = {_disp_label(r, j) for r in results}
        name = labels.pop() if len(labels) == 1 else "disp"
        add(f"{name}{j + 1}", [_est_se(r.estimates.disp[j], r.se.disp[j]) for r in results])
    max_taus = max((len(r.estimates.tau) for r in results), default=0)
    tau_names = ["tau(edge a)", "tau(edge b)", "tau(cond)"]
    for t in range(max_taus):
        cells = []
        for r in results:
            if t < len(r.estimates.tau):
                flag = " *" if r.boundary_flags[t] else ""
                cells.append(_est_se(r.estimates.tau[t], r.se.tau[t]) + flag)
            else:
                cells.append("-")
        add(tau_names[t], cells)
    add("loglik", [_fmt(float(r.loglik)) for r in results])
    add("AIC", [_fmt(float(r.aic)) for r in results])
    add("n_params", [str(r.n_params) for r in results])
    add("converged", ["yes" if r.converged else "no" for r in results])
    if any(v is not None for v in vuongs):
        for key, label in (("z0", "vuong z0"), ("p", "vuong p"), ("z0_adjusted", "vuong z0 adj"), ("p_adjusted", "vuong p adj")):
            cells = []
            for r, v in zip(results, vuongs):
                if v is None:
                    cells.append("baseline" if baseline_label == model_label(r.spec) else "-")
                else:
                    cells.append(_fmt(v[key], na="undefined"))
            add(label, cells)

    widths = [max(len(row[c]) for row in [headers] + rows) for c in range(len(headers))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    notes = []
    if baseline_label is not None:
        notes.append(f"Vuong baseline: {baseline_label}")
    if any(any(r.boundary_flags) for r in results):
        notes.append("* tau estimate within 5% of its admissible boundary; consider the truncated model")
    legend = []
    for r in results:
        perm = r.spec.perm
        legend.append(f"{model_label(r.spec)}: edges {perm.label()}")
    out = lines
    if notes:
        out += [""] + notes
    out += ["", "edge ordering per model:"] + ["  " + l for l in legend]
    return "\n".join(out) + "\n"


def render_sim_report(report: SimReport) -> str:
    """Text table per fit spec: truth, bias, SD, RMSE, sqrt mean var (x100)."""
    blocks = []
    for f in report.fits:
        head = (
            f"model {model_label(f.spec)}  "
            f"(used {f.n_used}/{report.replications}, excluded {f.n_excluded}, with SEs {f.n_se_available})"
        )
        headers = ["parameter", "truth", "bias", "SD", "RMSE", "sqrt(mean var)"]
        rows = [
            [p.name, _fmt(p.truth), _fmt(p.bias), _fmt(p.sd), _fmt(p.rmse), _fmt(p.sqrt_mean_theoretical_variance)]
            for p in f.params
        ]
        widths = [max(len(r[c]) for r in [headers] + rows) for c in range(len(headers))]
        lines = [head, "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(), "  ".join("-" * w for w in widths)]
        for r in rows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        blocks.append("\n".join(lines))
    head = f"simulation study: N={report.n_studies}, B={report.replications}, seed={report.seed} (bias/SD/RMSE scaled by 100)"
    return head + "\n\n" + "\n\n".join(blocks) + "\n"
