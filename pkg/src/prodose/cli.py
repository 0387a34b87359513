"""Batch entry points: simulation grids, sensitivity sweeps, conduct service.

Every subcommand is a thin shell over library calls; file outputs contain
exactly the library's numbers at the documented precision (selection
percentages to one decimal, means to two). Exit codes: 0 success, 2 invalid
configuration or usage, 3 runtime/numerical failure.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import click

from .configs import (
    build_design,
    bundled_path,
    load_json,
    load_scenarios,
    load_trial_template,
    parse_design_kind,
    validate_document,
)
from .designs import DesignKind
from .errors import ConfigError, IntegrityError, ProdoseError, ValidationError
from .simulate import OperatingCharacteristics, Scenario, SimJob, run_simulation
from .store import load_document, recommendation

EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

SUMMARY_COLUMNS = (
    "scenario",
    "design",
    *(f"sel_pct_d{i}" for i in range(1, 6)),
    "no_od",
    "no_pat_dlt",
    "no_clin_dlt",
    "no_mtd",
    "duration_weeks",
)


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _resolve_trial(trial: str) -> dict:
    if trial in ("n18", "n30", "n40"):
        return load_trial_template(bundled_path(f"trial_{trial}"))
    return load_trial_template(trial)


def _resolve_scenarios(path: str | None, select: str | None) -> list[Scenario]:
    scenarios = load_scenarios(path if path else bundled_path("scenarios"))
    if select:
        wanted = [s.strip() for s in select.split(",") if s.strip()]
        by_name = {s.name: s for s in scenarios}
        missing = [w for w in wanted if w not in by_name]
        if missing:
            raise ConfigError(
                f"unknown scenario name(s): {', '.join(missing)}; "
                f"available: {', '.join(by_name)}"
            )
        scenarios = [by_name[w] for w in wanted]
    return scenarios


def _resolve_designs(designs: str) -> list[DesignKind]:
    if designs.strip().lower() == "all":
        return list(DesignKind)
    return [parse_design_kind(d.strip(), "designs") for d in designs.split(",") if d.strip()]


def _summary_row(scenario: Scenario, kind: DesignKind, oc: OperatingCharacteristics) -> dict:
    row = {"scenario": scenario.name, "design": kind.value}
    for i, pct in enumerate(oc.selection_pct, start=1):
        row[f"sel_pct_d{i}"] = f"{pct:.1f}"
    row["no_od"] = f"{oc.mean_overdose_patients:.2f}"
    row["no_pat_dlt"] = f"{oc.mean_pat_dlt:.2f}"
    row["no_clin_dlt"] = f"{oc.mean_clin_dlt:.2f}"
    row["no_mtd"] = f"{oc.mean_mtd_patients:.2f}"
    row["duration_weeks"] = f"{oc.mean_duration_weeks:.2f}"
    return row


CELL_COLUMNS = (
    "scenario",
    "design",
    "n_replicates",
    "seed",
    *(f"sel_pct_d{i}" for i in range(1, 6)),
    "pcs",
    "no_od",
    "no_pat_dlt",
    "no_clin_dlt",
    "no_mtd",
    "duration_weeks",
    "true_dose",
)


def _cell_row(scenario: Scenario, kind: DesignKind, job: SimJob, oc) -> dict:
    """Full-precision single-row record; floats round-trip via repr."""
    row = {
        "scenario": scenario.name,
        "design": kind.value,
        "n_replicates": job.n_replicates,
        "seed": job.seed,
    }
    for i, pct in enumerate(oc.selection_pct, start=1):
        row[f"sel_pct_d{i}"] = repr(pct)
    row["pcs"] = repr(oc.pcs)
    row["no_od"] = repr(oc.mean_overdose_patients)
    row["no_pat_dlt"] = repr(oc.mean_pat_dlt)
    row["no_clin_dlt"] = repr(oc.mean_clin_dlt)
    row["no_mtd"] = repr(oc.mean_mtd_patients)
    row["duration_weeks"] = repr(oc.mean_duration_weeks)
    row["true_dose"] = "" if oc.true_dose is None else oc.true_dose
    return row


@click.group()
def main():
    """Dose-finding designs with patient-reported outcomes."""


@main.command()
@click.option("--scenarios", "scenarios_file", type=click.Path(), default=None,
              help="Scenario-set JSON file (default: bundled benchmark set).")
@click.option("--select", default=None, help="Comma-separated scenario names to run.")
@click.option("--trial", default="n18", show_default=True,
              help="Trial template file, or one of n18/n30/n40 for the bundled templates.")
@click.option("--designs", default="all", show_default=True,
              help="Comma list of designs (tite-crm, pro-crm, tite-pro-crm, tite-crm+pro) or 'all'.")
@click.option("--replicates", default=2000, show_default=True, type=int)
@click.option("--seed", default=20260809, show_default=True, type=int)
@click.option("--threads", default=1, show_default=True, type=int,
              help="Parallel workers for replicates.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
def simulate(scenarios_file, select, trial, designs, replicates, seed, threads, out_dir, fmt):
    """Run the simulation grid and write per-cell results plus a summary table."""
    try:
        scenarios = _resolve_scenarios(scenarios_file, select)
        template = _resolve_trial(trial)
        kinds = _resolve_designs(designs)
    except ProdoseError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    out = Path(out_dir)
    cells_dir = out / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    try:
        for scenario in scenarios:
            for kind in kinds:
                job = SimJob(
                    scenario=scenario,
                    design=build_design(template, kind),
                    n_replicates=replicates,
                    seed=seed,
                )
                oc = run_simulation(job, workers=threads)
                rows.append(_summary_row(scenario, kind, oc))
                label = scenario.name or "scenario"
                cell_path = cells_dir / f"{label}__{kind.value.replace('+', '_plus_')}.csv"
                _write_csv(cell_path, CELL_COLUMNS, [_cell_row(scenario, kind, job, oc)])
                click.echo(
                    f"scenario {label} {kind.value}: selection "
                    + "/".join(f"{p:.1f}" for p in oc.selection_pct)
                    + f"  duration {oc.mean_duration_weeks:.1f}w"
                )
    except ProdoseError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    if fmt == "json":
        (out / "summary.json").write_text(json.dumps(rows, indent=2) + "\n")
    else:
        _write_csv(out / "summary.csv", SUMMARY_COLUMNS, rows)
    click.echo(f"wrote {out / ('summary.' + fmt)}")


@main.command()
@click.option("--axis", type=click.Choice(["accrual", "shape", "theta"]), required=True)
@click.option("--scenarios", "scenarios_file", type=click.Path(), default=None)
@click.option("--select", default=None)
@click.option("--trial", default="n18", show_default=True)
@click.option("--design", "design_name", default="tite-pro-crm", show_default=True)
@click.option("--replicates", default=2000, show_default=True, type=int)
@click.option("--seed", default=20260809, show_default=True, type=int)
@click.option("--threads", default=1, show_default=True, type=int)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def sensitivity(axis, scenarios_file, select, trial, design_name, replicates, seed, threads, out_dir):
    """PCS grid over one data-generation axis (accrual, hazard shape or correlation)."""
    values = {
        "accrual": [2.0, 4.0],
        "shape": [1.0, 0.3, 3.0],
        "theta": [0.1, 0.9],
    }[axis]
    field = {
        "accrual": "accrual_per_window",
        "shape": "hazard_shape",
        "theta": "copula_tau",
    }[axis]
    try:
        scenarios = _resolve_scenarios(scenarios_file, select)
        template = _resolve_trial(trial)
        kind = parse_design_kind(design_name, "design")
    except ProdoseError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    rows = []
    try:
        for scenario in scenarios:
            for value in values:
                varied = dataclasses.replace(scenario, **{field: value})
                job = SimJob(
                    scenario=varied,
                    design=build_design(template, kind),
                    n_replicates=replicates,
                    seed=seed,
                )
                oc = run_simulation(job, workers=threads)
                rows.append(
                    {
                        "axis": axis,
                        "value": value,
                        "scenario": scenario.name,
                        "design": kind.value,
                        "pcs": f"{oc.pcs:.1f}",
                    }
                )
                click.echo(f"scenario {scenario.name} {axis}={value}: PCS {oc.pcs:.1f}")
    except ProdoseError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / f"sensitivity_{axis}.csv",
               ("axis", "value", "scenario", "design", "pcs"), rows)
    click.echo(f"wrote {out / f'sensitivity_{axis}.csv'}")


@main.command()
@click.option("--port", default=None, type=int, help="Default 8173; env PRODOSE_PORT.")
@click.option("--data-dir", default=None, type=click.Path(), help="Env PRODOSE_DATA_DIR.")
@click.option("--workers", default=None, type=int, help="Simulation workers; env PRODOSE_WORKERS.")
@click.option("--ui-dir", default=None, type=click.Path(),
              help="Static dashboard assets to serve at / (optional).")
def serve(port, data_dir, workers, ui_dir):
    """Run the trial-conduct HTTP service."""
    import uvicorn

    from .service import DEFAULT_PORT, create_app

    port = port if port is not None else int(os.environ.get("PRODOSE_PORT", DEFAULT_PORT))
    data_dir = data_dir or os.environ.get("PRODOSE_DATA_DIR", "./trials")
    workers = workers if workers is not None else int(os.environ.get("PRODOSE_WORKERS", 2))
    if ui_dir is None:
        default_ui = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        candidate = os.environ.get("PRODOSE_UI_DIR", str(default_ui))
        ui_dir = candidate if Path(candidate).is_dir() else None
    app = create_app(data_dir=data_dir, workers=workers, ui_dir=ui_dir, port=port)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="info")


@main.command()
@click.argument("file", type=click.Path())
def validate(file):
    """Schema-check a configuration or trial document file."""
    try:
        doc_type, _ = validate_document(load_json(file))
    except (ConfigError, ValidationError, IntegrityError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    click.echo(f"{file}: valid {doc_type}")


@main.command()
@click.option("--trial", "trial_file", type=click.Path(), required=True,
              help="Persisted trial document.")
@click.option("--at", "at_weeks", type=float, default=None,
              help="Decision clock in weeks (default: the document's clock).")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
def recommend(trial_file, at_weeks, fmt):
    """Offline next-dose (or final) recommendation for a persisted trial."""
    try:
        doc = load_document(trial_file)
        when = at_weeks if at_weeks is not None else (doc.state.now if doc.state else 0.0)
        rec = recommendation(doc, when)
    except (ConfigError, ValidationError, IntegrityError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except ProdoseError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    if fmt == "json":
        click.echo(json.dumps({
            "trial_id": doc.trial_id,
            "at": when,
            "dose": rec.dose,
            "mode": rec.mode,
            "model_choice": rec.model_choice,
            "constraint_applied": rec.constraint_applied,
            "clinician": dataclasses.asdict(rec.clinician),
            "patient": dataclasses.asdict(rec.patient),
        }, indent=2))
        return
    click.echo(f"trial {doc.trial_id} at week {when:g}: {rec.mode} -> dose {rec.dose}")
    for est in (rec.clinician, rec.patient):
        curve = " ".join(f"{p:.3f}" for p in est.probabilities)
        click.echo(
            f"  {est.stream.value:9s} target {est.target:.2f} choice {est.choice} "
            f"curve [{curve}]"
        )
    if rec.mode == "assignment" and rec.constraint_applied:
        click.echo(
            f"  escalation constraint applied: model choice {rec.model_choice} "
            f"-> assigned {rec.dose}"
        )


def _write_csv(path: Path, columns, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)


if __name__ == "__main__":
    main()
