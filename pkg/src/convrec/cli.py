"""Command-line entry points: serve, simulate, learn, synthetic data."""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click

from .adaptive import StoppingConfig
from .catalog import catalog_to_dict, load_catalog
from .engine import compile_model
from .errors import ConvrecError
from .evaluation import (
    emit_report,
    generate_synthetic_catalog,
    generate_synthetic_log,
    read_replay_log,
    replay,
    sweep_threshold,
    write_replay_log,
)
from .kernels import backend_name
from .learning import (
    OBSERVATION_LOG_COLUMNS,
    learn_tables,
    learned_tables_document,
    read_observation_log,
)
from .property_net import FLAT_JOINT_KEY, build_property_model
from .service import create_app, events_to_observation_rows


def _load(catalog_path: str):
    with open(catalog_path, encoding="utf-8") as fh:
        return load_catalog(json.load(fh))


@click.group()
def main() -> None:
    """Conversational recommendation engine."""


@main.command()
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--persist", "persist_dir", default=None, type=click.Path(file_okay=False))
@click.option("--host", default=None, help="Overrides the host part of CONVREC_ADDR.")
@click.option("--port", default=None, type=int, help="Overrides the port part of CONVREC_ADDR.")
@click.option("--top-k", default=5, show_default=True, help="Items in answer payloads.")
@click.option("--static", "static_dir", default=None, type=click.Path(exists=True, file_okay=False),
              help="Directory with a built web client, served at /.")
def serve(catalog_path, persist_dir, host, port, top_k, static_dir) -> None:
    """Run the HTTP session API (address via CONVREC_ADDR, host:port)."""
    import uvicorn

    addr = os.environ.get("CONVREC_ADDR", "127.0.0.1:8000")
    env_host, _, env_port = addr.rpartition(":")
    model = compile_model(_load(catalog_path))
    app = create_app(model, persist_dir=persist_dir, top_k=top_k, static_dir=static_dir)
    click.echo(f"kernel backend: {backend_name()}", err=True)
    uvicorn.run(app, host=host or env_host or "127.0.0.1", port=port or int(env_port))


@main.command()
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--stop-s", default=None, type=int, help="Entropy stop size; omit to replay fully.")
@click.option("--max-questions", default=None, type=int)
@click.option("--mode", default="strict", type=click.Choice(["strict", "soft"]), show_default=True)
@click.option("--static-order", is_flag=True, help="Fixed catalogue order instead of adaptive.")
@click.option("--sweep", "sweep_spec", default=None,
              help="Comma-separated s values for the threshold sweep, e.g. '1,2,5'.")
def simulate(catalog_path, log_path, out_dir, stop_s, max_questions, mode, static_order, sweep_spec) -> None:
    """Replay a recorded answer log and write the metric reports."""
    model = compile_model(_load(catalog_path))
    records = read_replay_log(log_path)
    config = StoppingConfig(
        stop_s=stop_s,
        max_questions=max_questions,
        mode=mode,
        order="static" if static_order else "adaptive",
    )
    metrics = replay(model, records, config)
    sweep = None
    if sweep_spec:
        s_values = [int(x) for x in sweep_spec.split(",") if x.strip()]
        sweep = sweep_threshold(model, records, s_values, config)
    written = emit_report(metrics, out_dir, sweep)
    for path in written:
        click.echo(str(path))
    if metrics.mean_fraction_retained is not None:
        click.echo(f"mean fraction retained: {metrics.mean_fraction_retained:.4f}")
    if metrics.empty_reference_count:
        click.echo(f"sessions with empty reference: {metrics.empty_reference_count}")


@main.command()
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True),
              help="Observation CSV: session_id, chosen_item, question_id, answer_id.")
@click.option("--ess", default="1", show_default=True,
              help="Equivalent sample size of the elicited prior (number or fraction).")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="Write the updated catalogue document here (default: stdout).")
@click.option("--strict/--lenient", default=False, show_default=True,
              help="Reject observations hitting structurally impossible cells.")
def learn(catalog_path, log_path, ess, out_path, strict) -> None:
    """Blend the elicited tables with an observation log."""
    from fractions import Fraction

    catalog = _load(catalog_path)
    if not catalog.properties:
        raise click.ClickException("catalogue has no property layer; nothing to learn")
    has_prior_tables = any(
        catalog.has_property(k) or k == FLAT_JOINT_KEY for k in catalog.expert_tables
    )
    pm = build_property_model(catalog, mode="expert" if has_prior_tables else "strategies")
    rows = read_observation_log(log_path)
    learned, report = learn_tables(catalog, pm, rows, ess=Fraction(ess), lenient=not strict)
    for line in report:
        click.echo(f"skipped: {line}", err=True)
    tables_doc = learned_tables_document(pm, learned)
    if not tables_doc:
        raise click.ClickException("no learnable tables (all CPTs are identity clones)")
    doc = catalog_to_dict(catalog)
    doc["expert_tables"] = {**doc.get("expert_tables", {}), **tables_doc}
    text = json.dumps(doc, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(out_path)
    else:
        sys.stdout.write(text)


@main.command("synth-catalog")
@click.option("--items", "n_items", required=True, type=int)
@click.option("--questions", "n_questions", required=True, type=int)
@click.option("--answers", "answers_range", default="3:5", show_default=True,
              help="Answers per question, LO:HI.")
@click.option("--strategy", default=None, type=click.Choice(["ujs", "ups"]))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def synth_catalog(n_items, n_questions, answers_range, strategy, seed, out_path) -> None:
    """Generate a random answer-compatibility catalogue."""
    lo, _, hi = answers_range.partition(":")
    catalog = generate_synthetic_catalog(
        n_items, n_questions,
        answers_range=(int(lo), int(hi or lo)),
        strategy=strategy,
        seed=seed,
    )
    Path(out_path).write_text(
        json.dumps(catalog_to_dict(catalog), indent=2) + "\n", encoding="utf-8"
    )
    click.echo(out_path)


@main.command("synth-log")
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--sessions", "n_sessions", required=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--noise", default=0.0, show_default=True, type=float)
@click.option("--questions-per-session", default=None, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def synth_log(catalog_path, n_sessions, seed, noise, questions_per_session, out_path) -> None:
    """Generate simulated questionnaires from a catalogue's own model."""
    model = compile_model(_load(catalog_path))
    records = generate_synthetic_log(
        model, n_sessions, seed=seed, noise=noise,
        questions_per_session=questions_per_session,
    )
    write_replay_log(records, out_path)
    click.echo(out_path)


@main.command("export-observations")
@click.option("--events", "events_path", required=True, type=click.Path(exists=True),
              help="Service event log (events.jsonl).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def export_observations(events_path, out_path) -> None:
    """Flatten a service event log into a learning observation CSV."""
    rows = events_to_observation_rows(events_path)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(OBSERVATION_LOG_COLUMNS))
        writer.writeheader()
        writer.writerows(rows)
    click.echo(f"{out_path} ({len(rows)} rows)")


def run() -> None:
    try:
        main(prog_name="convrec")
    except ConvrecError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(2)


if __name__ == "__main__":
    run()
