"""Command-line entry points: gateway serve/query, datagen, eval."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import datagen as dg
from . import evalharness as ev
from .gateway import GatewayService, create_app, service_from_config, build_backend
from .hierarchy import load_registry
from .mock_rules import MockRulesBackend


@click.group()
def gateway():
    """Natural-language API gateway."""


@gateway.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def serve(config_path):
    """Serve the gateway HTTP API."""
    import uvicorn
    config = json.loads(Path(config_path).read_text())
    service = service_from_config(config)
    host, _, port = config.get("listen", "127.0.0.1:8080").rpartition(":")
    uvicorn.run(create_app(service), host=host or "127.0.0.1", port=int(port))


@gateway.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--text", required=True)
@click.option("--session-id", default="cli")
def query(config_path, text, session_id):
    """One-shot query through the pipeline, no server."""
    service = (service_from_config(config_path) if config_path
               else GatewayService())
    response = service.handle_query(text, session_id)
    click.echo(json.dumps(response, indent=1, default=str))


@click.group(name="datagen")
def datagen_cli():
    """Synthetic dataset generation and review."""


@datagen_cli.command()
@click.option("--registry", "registry_path", type=click.Path(exists=True))
@click.option("--backend", "backend_name", default="template",
              help="'template' or a backend config JSON file")
@click.option("--plan", "plan_path", type=click.Path(exists=True),
              help="rules JSON; defaults to the built-in 1300-sample plan")
@click.option("--seed", default=42, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def generate(registry_path, backend_name, plan_path, seed, out_path):
    """Generate a labeled dataset and write it as JSON."""
    registry = load_registry(registry_path)
    rules = dg.load_plan(plan_path) if plan_path else dg.default_plan(registry)
    batches = []
    for rule in rules:
        batch_id = f"{rule.target.module}.{rule.target.function}"
        if backend_name == "template":
            batches.append(dg.template_generate(rule, seed, batch_id=batch_id))
        else:
            backend = build_backend(json.loads(Path(backend_name).read_text()))
            batches.append(dg.generate_batch(rule, backend,
                                             batch_size=rule.samples_requested,
                                             batch_id=batch_id))
    dataset = dg.assemble_dataset(batches, registry)
    dg.save_dataset(dataset, out_path)
    click.echo(f"wrote {len(dataset.records)} records to {out_path}")
    for module, count in dataset.counts.items():
        click.echo(f"  {module}: {count}")


@datagen_cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--registry", "registry_path", type=click.Path(exists=True))
def review(dataset_path, registry_path):
    """Interactive accept/reject pass over unreviewed records."""
    registry = load_registry(registry_path)
    dataset = dg.load_dataset(dataset_path, registry)
    decisions = []
    for idx, rec in enumerate(dataset.records):
        if rec.review != "unreviewed":
            continue
        click.echo(f"\n[{idx}] {rec.query}")
        click.echo(f"    label: {rec.label.module}.{rec.label.function}")
        choice = click.prompt("accept/reject/quit", type=click.Choice(["a", "r", "q"]),
                              default="a")
        if choice == "q":
            break
        if choice == "a":
            decisions.append({"index": idx, "decision": "accept"})
        else:
            reason = click.prompt("reason", default="")
            decisions.append({"index": idx, "decision": "reject", "reason": reason})
        # persist incrementally so long sessions survive interruption
        dg.review_session(dataset, decisions[-1:])
        dg.save_dataset(dataset, dataset_path)
    accepted = sum(1 for d in decisions if d["decision"] == "accept")
    rejected = len(decisions) - accepted
    rate = accepted / len(decisions) if decisions else None
    click.echo(f"\nreviewed {len(decisions)}: {accepted} accepted, "
               f"{rejected} rejected, acceptance_rate={rate}")


@datagen_cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
def stats(dataset_path):
    """Per-module counts and review state for a dataset."""
    dataset = dg.load_dataset(dataset_path)
    click.echo(f"records: {len(dataset.records)}")
    for module, count in sorted(dataset.counts.items()):
        click.echo(f"  {module}: {count}")
    by_review = {}
    for rec in dataset.records:
        by_review[rec.review] = by_review.get(rec.review, 0) + 1
    click.echo(f"review: {by_review}")


@click.group(name="eval")
def eval_cli():
    """Classifier evaluation over stored datasets and predictions."""


@eval_cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--backend", "backend_name", default="mock",
              help="'mock' or a backend config JSON file")
@click.option("--registry", "registry_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--workers", default=4, type=int)
def run(dataset_path, backend_name, registry_path, out_path, workers):
    """Run a backend over a dataset; predictions land in a JSON-lines file."""
    registry = load_registry(registry_path)
    dataset = dg.load_dataset(dataset_path, registry)
    if backend_name == "mock":
        backend = MockRulesBackend()
    else:
        backend = build_backend(json.loads(Path(backend_name).read_text()))
    preds = ev.run_predictions(dataset, backend, registry, out_path=out_path,
                               workers=workers)
    click.echo(f"wrote {len(preds)} predictions to {out_path}")


@eval_cli.command()
@click.option("--pred", "pred_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--registry", "registry_path", type=click.Path(exists=True))
@click.option("--format", "fmt", default="table",
              type=click.Choice(["table", "json"]))
def score(pred_paths, registry_path, fmt):
    """Score stored prediction files and render the comparison report."""
    registry = load_registry(registry_path)
    reports = ev.build_report(list(pred_paths), registry)
    if fmt == "json":
        click.echo(ev.report_set_to_json(reports))
    else:
        click.echo(ev.render_table(reports, registry))


@eval_cli.command()
@click.option("--pred", "pred_paths", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--registry", "registry_path", type=click.Path(exists=True))
@click.option("--emit-pool-config", "pool_config_path", type=click.Path())
def select(pred_paths, registry_path, pool_config_path):
    """Pick the best backend and optionally emit a gateway pool fragment."""
    registry = load_registry(registry_path)
    reports = ev.build_report(list(pred_paths), registry)
    best = ev.select_best(reports)
    click.echo(f"best backend: {best.backend_id} "
               f"(micro MLC {best.overall_mlc_micro:.3f})")
    if pool_config_path:
        Path(pool_config_path).write_text(
            json.dumps(ev.pool_config_fragment(best), indent=1) + "\n")
        click.echo(f"pool config written to {pool_config_path}")


def main():  # single installable entry that exposes all three groups
    cli = click.Group(commands={"gateway": gateway, "datagen": datagen_cli,
                                "eval": eval_cli})
    cli()


if __name__ == "__main__":
    main()
