"""Command-line entry points: serve the API, validate content packs,
score response sheets, run headless cohort simulations, and analyze
experiment CSVs."""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click

from .assessment import analyze_experiment, read_gain_records, render_report_table, report_to_dict
from .ils import ResponseSheet, load_instrument, score_ils
from .simulate import load_cohort_spec, simulate_cohort
from .syllabus import ValidationError, default_pack_path, load_content_pack


def _default_instrument() -> Path:
    from importlib import resources

    return Path(str(resources.files("scrumtrainer.packs") / "ils_instrument.json"))


@click.group()
def main() -> None:
    """Adaptive Scrum training engine."""


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(path_type=Path), default=Path("./data"), show_default=True)
@click.option("--pack", type=click.Path(path_type=Path), default=None, help="Content pack (defaults to the bundled pack).")
@click.option("--instrument", type=click.Path(path_type=Path), default=None, help="ILS instrument file (defaults to the bundled fixture).")
@click.option("--seed", default=0, show_default=True, help="Default seed for seeded server-side operations (team formation).")
@click.option("--static-dir", type=click.Path(path_type=Path), default=None, help="Built web console to serve at /.")
@click.option("--no-exports", is_flag=True, help="Disable CSV export endpoints (sensitive-data gate).")
def serve(port, host, data_dir, pack, instrument, seed, static_dir, no_exports) -> None:
    """Run the HTTP+JSON service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        pack_path=pack or default_pack_path(),
        instrument_path=instrument or _default_instrument(),
        data_dir=data_dir,
        default_seed=seed,
        exports_enabled=not no_exports,
        static_dir=static_dir,
    )
    app = create_app(config)
    uvicorn.run(app, host=host, port=port)


@main.command("validate-content")
@click.argument("pack", type=click.Path(exists=True, path_type=Path))
def validate_content(pack: Path) -> None:
    """Validate a content pack; exits nonzero and lists findings on error."""
    try:
        graph = load_content_pack(pack)
    except ValidationError as exc:
        for finding in exc.findings:
            click.echo(f"FINDING: {finding}", err=True)
        sys.exit(1)
    except Exception as exc:
        click.echo(f"ERROR: {exc}", err=True)
        sys.exit(1)
    click.echo(f"ok: {graph.name or pack.name} ({len(graph.topics)} topics)")


@main.command("score-ils")
@click.argument("responses", type=click.Path(exists=True, path_type=Path))
@click.option("--instrument", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of CSV.")
def score_ils_cmd(responses: Path, instrument: Path | None, as_json: bool) -> None:
    """Score a response CSV (learner_id,answers with a 44-char a/b string)."""
    inst = load_instrument(instrument or _default_instrument())
    profiles = []
    with responses.open() as fh:
        for row in csv.DictReader(fh):
            answers = {i + 1: ch for i, ch in enumerate(row["answers"].strip())}
            sheet = ResponseSheet(learner_id=row["learner_id"], answers=answers)
            profile = score_ils(sheet, inst)
            profiles.append(profile)
    if as_json:
        click.echo(
            json.dumps(
                [
                    {
                        "learner_id": p.learner_id,
                        "dims": list(p.dims),
                        "processing_style": p.processing_style.value,
                    }
                    for p in profiles
                ],
                indent=2,
            )
        )
        return
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["learner_id", "perception", "understanding", "processing", "input", "processing_style"])
    for p in profiles:
        writer.writerow([p.learner_id, *p.dims, p.processing_style.value])
    click.echo(out.getvalue(), nl=False)


@main.command("simulate-cohort")
@click.option("--pack", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--instrument", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--spec", type=click.Path(exists=True, path_type=Path), default=None, help="Cohort spec JSON (defaults to the built-in reference cohort).")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("./simulation"), show_default=True)
def simulate_cohort_cmd(pack, instrument, spec, seed, out) -> None:
    """Run the end-to-end headless pipeline and write gains.csv + report.json."""
    graph = load_content_pack(pack or default_pack_path())
    inst = load_instrument(instrument or _default_instrument())
    cohort_spec = load_cohort_spec(str(spec) if spec else None)
    result = simulate_cohort(graph, inst, cohort_spec, seed)
    out.mkdir(parents=True, exist_ok=True)
    (out / "gains.csv").write_text(result.csv_text)
    (out / "report.json").write_text(json.dumps(result.report, indent=2) + "\n")
    (out / "traces.json").write_text(
        json.dumps({"seed": seed, "traces": result.traces}, indent=2) + "\n"
    )
    click.echo(f"simulated {len(result.records)} learners (seed={seed}) -> {out}")
    click.echo(result.report["verdict"])


@main.command("analyze-experiment")
@click.argument("gains_csv", type=click.Path(exists=True, path_type=Path))
@click.option("--json-out", type=click.Path(path_type=Path), default=None, help="Also write the report as JSON.")
def analyze_experiment_cmd(gains_csv: Path, json_out: Path | None) -> None:
    """Analyze a gains CSV (learner_id,style,method,pre,post)."""
    records, excluded = read_gain_records(gains_csv.read_text())
    report = analyze_experiment(records)
    if excluded:
        click.echo(f"excluded (undefined gain): {', '.join(excluded)}", err=True)
    click.echo(render_report_table(report), nl=False)
    if json_out:
        doc = report_to_dict(report)
        doc["excluded"] = excluded
        json_out.write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
