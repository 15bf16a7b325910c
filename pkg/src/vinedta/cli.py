"""Command line interface: data ingestion, fits/sweeps, simulation, bench.

Input is a CSV of per-study 2x2 tables (study_id, tp, fp, fn, tn); the
diseased denominator is tp+fn, so prevalence needs no extra column.  The
``run`` command fits the requested model space, compares everything to a
baseline by Vuong tests, and writes a machine-readable JSON document plus
an aligned text table.  ``simulate`` runs a scenario file through the
simulation harness and ``bench`` times the two likelihood backends.
"""
from __future__ import annotations

import csv
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import click
import yaml

from .backend import active_backend
from .benchmark import format_benchmark, run_benchmark
from .copulas import CopulaFamily, family_from_name
from .inference import FitResult, ParamVector, build_model_spec, fit, sweep, vuong
from .margins import MarginKind, StudyRecord
from .reports import (
    SCHEMA_FIT,
    SCHEMA_SIM,
    fit_result_to_dict,
    json_bytes,
    model_label,
    render_fit_table,
    render_sim_report,
    sim_report_to_dict,
)
from .simstudy import SimScenario, SizeDist, run_study
from .vine import DEFAULT_NQ, Permutation, VineModelSpec, enumerate_permutations

_COLUMNS = ("study_id", "tp", "fp", "fn", "tn")


@dataclass(frozen=True)
class InputRow:
    study_id: str
    tp: int
    fp: int
    fn: int
    tn: int

    def to_record(self) -> StudyRecord:
        return StudyRecord(
            y1=self.tp,
            n1=self.tp + self.fn,
            y2=self.tn,
            n2=self.tn + self.fp,
            y3=self.tp + self.fn,
            n3=self.tp + self.fp + self.fn + self.tn,
        )


@dataclass(frozen=True)
class InputTable:
    rows: tuple[InputRow, ...]

    def to_records(self) -> list[StudyRecord]:
        return [r.to_record() for r in self.rows]


def read_table(path) -> InputTable:
    """Parse the canonical CSV; errors carry 1-based line numbers."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        cols = {name.strip().lower(): i for i, name in enumerate(header)}
        for required in _COLUMNS:
            if required not in cols:
                raise ValueError(f"{path}: missing required column {required!r}")
        rows = []
        seen = set()
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) < len(header):
                raise ValueError(f"{path}, line {lineno}: expected {len(header)} fields, got {len(raw)}")
            study_id = raw[cols["study_id"]].strip()
            counts = {}
            for name in ("tp", "fp", "fn", "tn"):
                cell = raw[cols[name]].strip()
                try:
                    value = int(cell)
                except ValueError:
                    raise ValueError(f"{path}, line {lineno}: could not parse {name}={cell!r} as an integer") from None
                if value < 0:
                    raise ValueError(f"{path}, line {lineno}: negative count {name}={value}")
                counts[name] = value
            if study_id in seen:
                warnings.warn(f"{path}, line {lineno}: duplicate study_id {study_id!r}", stacklevel=2)
            seen.add(study_id)
            rows.append(InputRow(study_id=study_id, **counts))
    return InputTable(rows=tuple(rows))


def read_input(path) -> list[StudyRecord]:
    """Study records from the canonical CSV (tp+fn diseased, tn+fp healthy)."""
    return read_table(path).to_records()


def write_table(path, table: InputTable) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_COLUMNS)
        for r in table.rows:
            writer.writerow([r.study_id, r.tp, r.fp, r.fn, r.tn])


def parse_families(token: str):
    """Family selections: comma-separated entries, each 'fam' or 'famA/famB'."""
    out = []
    for entry in token.split(","):
        entry = entry.strip()
        if not entry:
            continue
        parts = [family_from_name(p) for p in entry.split("/")]
        out.append(parts[0] if len(parts) == 1 else tuple(parts))
    if not out:
        raise ValueError("family selection is empty")
    return out


def parse_permutations(token: str) -> list[Permutation]:
    token = token.strip().lower()
    perms = enumerate_permutations()
    if token == "all":
        return perms
    out = []
    for part in token.split(","):
        part = part.strip()
        if part not in ("1", "2", "3"):
            raise ValueError(f"permutation selector must be 'all' or root indices 1-3, got {part!r}")
        out.append(perms[int(part) - 1])
    return out


def parse_margins(token: str) -> list[MarginKind]:
    out = []
    for part in token.split(","):
        part = part.strip().lower()
        if not part:
            continue
        try:
            out.append(MarginKind(part))
        except ValueError:
            raise ValueError(f"unknown margin kind {part!r}; expected 'normal' or 'beta'") from None
    if not out:
        raise ValueError("margin selection is empty")
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of one ``run`` invocation."""

    data: str
    families: str = "bvn"
    margins: str = "normal"
    permutations: str = "all"
    truncate: bool = False
    nq: int = DEFAULT_NQ
    seed: int | None = None
    baseline: str = "glmm"
    rank_by: str = "aic"
    out: str = "results.json"
    text_out: str = "report.txt"

    def __post_init__(self):
        if self.nq < 5:
            raise ValueError(f"nq must be at least 5, got {self.nq}")
        if self.baseline not in ("glmm", "none"):
            raise ValueError(f"baseline must be 'glmm' or 'none', got {self.baseline!r}")
        if self.rank_by not in ("aic", "loglik"):
            raise ValueError(f"rank_by must be 'aic' or 'loglik', got {self.rank_by!r}")
        # parse eagerly so bad selections fail before any fitting
        parse_families(self.families)
        parse_margins(self.margins)
        parse_permutations(self.permutations)


def _is_glmm(spec: VineModelSpec) -> bool:
    return (
        all(getattr(spec, e).family == CopulaFamily.BVN for e in ("edge_a", "edge_b", "edge_cond"))
        and all(m.kind == MarginKind.NORMAL_LOGIT for m in spec.margins)
    )


def _vuong_entry(res: FitResult, baseline: FitResult) -> dict | None:
    if res is baseline or res.study_logliks is None or baseline.study_logliks is None:
        return None
    z0, p = vuong(baseline, res, adjusted=False)
    z0a, pa = vuong(baseline, res, adjusted=True)
    num = lambda v: v if math.isfinite(v) else None
    return {"z0": num(z0), "p": num(p), "z0_adjusted": num(z0a), "p_adjusted": num(pa)}


def run(config: RunConfig) -> int:
    """Execute a fit/sweep per config; returns the process exit status."""
    records = read_input(config.data)
    if len(records) < 2:
        raise ValueError(f"{config.data}: at least 2 studies are required for a fit, got {len(records)}")
    families = parse_families(config.families)
    margins = parse_margins(config.margins)
    perms = parse_permutations(config.permutations)
    results = sweep(
        records,
        families,
        margins,
        perms,
        truncate=config.truncate,
        rank_by=config.rank_by,
        nq=config.nq,
    )
    baseline_res = None
    baseline_extra = False
    if config.baseline == "glmm":
        for res in results:
            if _is_glmm(res.spec) and res.spec.perm.root == 1 and res.converged:
                baseline_res = res
                break
        if baseline_res is None:
            bspec = build_model_spec(enumerate_permutations()[0], CopulaFamily.BVN, MarginKind.NORMAL_LOGIT, truncate=False)
            baseline_res = fit(records, bspec, nq=config.nq)
            baseline_extra = True
    table = list(results) + ([baseline_res] if baseline_extra else [])
    vuongs = [(_vuong_entry(r, baseline_res) if baseline_res is not None else None) for r in table]
    baseline_label = model_label(baseline_res.spec) if baseline_res is not None else None
    doc = {
        "schema": SCHEMA_FIT,
        "backend": active_backend(),
        "config": {
            "data": str(config.data),
            "families": config.families,
            "margins": config.margins,
            "permutations": config.permutations,
            "truncate": config.truncate,
            "nq": config.nq,
            "seed": config.seed,
            "baseline": config.baseline,
            "rank_by": config.rank_by,
        },
        "n_studies": len(records),
        "baseline": baseline_label,
        "results": [
            {**fit_result_to_dict(r, v), "rank": i + 1, "is_baseline": baseline_res is not None and r is baseline_res}
            for i, (r, v) in enumerate(zip(table, vuongs))
        ],
    }
    Path(config.out).write_bytes(json_bytes(doc))
    text = render_fit_table(table, vuongs, baseline_label)
    Path(config.text_out).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)
    return 0


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

def _model_from_dict(d: dict) -> VineModelSpec:
    perm = enumerate_permutations()[int(d.get("permutation", 1)) - 1]
    fams = d["families"]
    if isinstance(fams, str):
        parsed = parse_families(fams)
        if len(parsed) != 1:
            raise ValueError(f"model entry must name exactly one family combination, got {fams!r}")
        fams = parsed[0]
    else:
        fams = tuple(family_from_name(f) for f in fams)
    kind = MarginKind(str(d.get("margins", "normal")).lower())
    return build_model_spec(perm, fams, kind, truncate=bool(d.get("truncate", False)))


def scenario_from_dict(doc: dict, seed: int) -> SimScenario:
    """Build a SimScenario from a parsed scenario document."""
    true_doc = doc["true_model"]
    true_spec = _model_from_dict(true_doc)
    true_params = ParamVector(
        pi=tuple(float(v) for v in true_doc["pi"]),
        disp=tuple(float(v) for v in true_doc["disp"]),
        tau=tuple(float(v) for v in true_doc.get("tau", ())),
    )
    fit_docs = doc.get("fit_models") or [true_doc]
    size = doc.get("size_dist", {})
    return SimScenario(
        n_studies=int(doc["n_studies"]),
        true_spec=true_spec,
        true_params=true_params,
        replications=int(doc["replications"]),
        fit_specs=tuple(_model_from_dict(fd) for fd in fit_docs),
        seed=int(seed),
        size_dist=SizeDist(
            shape=float(size.get("shape", 1.2)),
            rate=float(size.get("rate", 0.01)),
            lag=int(size.get("lag", 30)),
        ),
    )


def load_scenario(path, seed: int) -> SimScenario:
    with Path(path).open("r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: scenario file must be a mapping")
    return scenario_from_dict(doc, seed)


# ---------------------------------------------------------------------------
# click commands
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Vine copula mixed models for diagnostic test accuracy meta-analysis."""


@main.command("run")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False), help="Input CSV (study_id,tp,fp,fn,tn).")
@click.option("--families", default="bvn", show_default=True, help="Comma list; entries 'fam' or 'famA/famB'.")
@click.option("--margins", default="normal", show_default=True, help="Comma list of margin kinds (normal, beta).")
@click.option("--permutations", default="all", show_default=True, help="'all' or comma list of root indices 1-3.")
@click.option("--truncate", is_flag=True, help="Replace the conditional edge with independence.")
@click.option("--nq", default=DEFAULT_NQ, show_default=True, type=int, help="Quadrature nodes per dimension.")
@click.option("--seed", default=None, type=int, help="Recorded in the output document.")
@click.option("--baseline", default="glmm", show_default=True, type=click.Choice(["glmm", "none"]), help="Vuong baseline model.")
@click.option("--rank-by", default="aic", show_default=True, type=click.Choice(["aic", "loglik"]))
@click.option("--out", default="results.json", show_default=True, type=click.Path(dir_okay=False))
@click.option("--text-out", default="report.txt", show_default=True, type=click.Path(dir_okay=False))
def run_cmd(data, families, margins, permutations, truncate, nq, seed, baseline, rank_by, out, text_out):
    """Fit the selected model space to a dataset and rank the fits."""
    try:
        config = RunConfig(
            data=data,
            families=families,
            margins=margins,
            permutations=permutations,
            truncate=truncate,
            nq=nq,
            seed=seed,
            baseline=baseline,
            rank_by=rank_by,
            out=out,
            text_out=text_out,
        )
        sys.exit(run(config))
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("simulate")
@click.option("--scenario", required=True, type=click.Path(exists=True, dir_okay=False), help="YAML scenario file.")
@click.option("--seed", required=True, type=int, help="Master seed for all replicate streams.")
@click.option("--nq", default=DEFAULT_NQ, show_default=True, type=int)
@click.option("--out", default="simulation.json", show_default=True, type=click.Path(dir_okay=False))
@click.option("--text-out", default="simulation.txt", show_default=True, type=click.Path(dir_okay=False))
def simulate_cmd(scenario, seed, nq, out, text_out):
    """Run a simulation study scenario."""
    try:
        scen = load_scenario(scenario, seed)
        if nq < 5:
            raise ValueError(f"nq must be at least 5, got {nq}")
        report = run_study(scen, nq=nq)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        raise click.ClickException(str(exc)) from exc
    doc = {"schema": SCHEMA_SIM, "backend": active_backend(), "scenario_file": str(scenario), "report": sim_report_to_dict(report)}
    Path(out).write_bytes(json_bytes(doc))
    text = render_sim_report(report)
    Path(text_out).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


@main.command("bench")
@click.option("--nq", default=DEFAULT_NQ, show_default=True, type=int)
@click.option("--studies", default=20, show_default=True, type=int)
@click.option("--repeats", default=25, show_default=True, type=int)
def bench_cmd(nq, studies, repeats):
    """Compare the numba and numpy likelihood backends."""
    result = run_benchmark(nq=nq, n_studies=studies, repeats=repeats)
    click.echo(format_benchmark(result), nl=False)


if __name__ == "__main__":
    main()
