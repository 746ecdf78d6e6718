"""Command-line interface: one subcommand per primitive plus the scripted
session runner, the evaluation harness, and the HTTP server.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import evaluation as eval_mod
from . import mapspec as mapspec_mod
from . import matchers as matchers_mod
from . import materialize as materialize_mod
from . import tablecore
from .agent.loop import run_playbook
from .config import load_config
from .errors import HarmonkitError
from .matchers import MatchMethod
from .provenance import ProvenanceLog, replay


def _fail_on_error(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except HarmonkitError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _write_json(path: str | None, payload) -> None:
    text = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    if path is None or path == "-":
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text, encoding="utf-8")


method_option = click.option(
    "--method", "-m", default="tfidf_ngram", show_default=True,
    help="Similarity method: exact, levenshtein, tfidf_ngram[:n] (alias tfidf).",
)


@click.group()
@click.version_option(package_name="harmonkit")
def main():
    """Interactive tabular data harmonization toolkit."""


@main.command("match-schema")
@click.option("--source", required=True, type=click.Path(), help="Source CSV file.")
@click.option("--vocab", required=True, type=click.Path(), help="Target vocabulary JSON.")
@method_option
@click.option("--columns", help="Comma-separated subset of source columns.")
@click.option("--out", "-o", help="Write match results JSON here (default stdout).")
@_fail_on_error
def match_schema_cmd(source, vocab, method, columns, out):
    """Match every source column to its best target attribute."""
    subset = [c.strip() for c in columns.split(",")] if columns else None
    table = tablecore.load_table(source, columns=subset)
    schema = tablecore.load_vocabulary(vocab)
    matches = matchers_mod.match_schema(table, schema, MatchMethod.parse(method))
    _write_json(out, matchers_mod.column_matches_to_json(matches))


@main.command("top-matches")
@click.option("--source", required=True, type=click.Path())
@click.option("--vocab", required=True, type=click.Path())
@click.option("--column", required=True, help="Source column to rank candidates for.")
@click.option("--k", default=10, show_default=True, type=int)
@method_option
@click.option("--out", "-o")
@_fail_on_error
def top_matches_cmd(source, vocab, column, k, method, out):
    """Rank the top-k candidate attributes for one column."""
    table = tablecore.load_table(source)
    schema = tablecore.load_vocabulary(vocab)
    ranked = matchers_mod.top_matches(table, column, schema, k, MatchMethod.parse(method))
    _write_json(out, [{"target": name, "score": score} for name, score in ranked])


@main.command("match-values")
@click.option("--source", required=True, type=click.Path())
@click.option("--vocab", required=True, type=click.Path())
@click.option("--mapping", required=True, type=click.Path(),
              help="Column mapping JSON: {source: target} or a match-results array.")
@method_option
@click.option("--out", "-o")
@_fail_on_error
def match_values_cmd(source, vocab, mapping, method, out):
    """Match distinct source values to permissible target values."""
    table = tablecore.load_table(source)
    schema = tablecore.load_vocabulary(vocab)
    doc = json.loads(Path(mapping).read_text(encoding="utf-8"))
    if isinstance(doc, dict):
        pairs = [(src, tgt) for src, tgt in doc.items()]
    else:
        pairs = [(e["source"], e["target"]) for e in doc if e.get("target")]
    method_obj = MatchMethod.parse(method)
    tables = matchers_mod.match_values(table, schema, pairs, method_obj)
    _write_json(out, [matchers_mod.value_table_to_json(t, str(method_obj)) for t in tables])


@main.command("build-spec")
@click.option("--matches", required=True, type=click.Path(), help="Column match results JSON.")
@click.option("--values", type=click.Path(), help="Value match tables JSON.")
@click.option("--out", "-o")
@_fail_on_error
def build_spec_cmd(matches, values, out):
    """Compile match results into a mapping specification."""
    column_matches = [
        matchers_mod.ColumnMatch(
            source_column=e["source"],
            target_attribute=e.get("target"),
            score=e.get("score", 0.0),
            method=e.get("method", "tfidf_ngram"),
            corrected=e.get("corrected", False),
            corrected_from=e.get("corrected_from"),
        )
        for e in json.loads(Path(matches).read_text(encoding="utf-8"))
    ]
    value_tables = []
    if values:
        for t in json.loads(Path(values).read_text(encoding="utf-8")):
            value_tables.append(
                matchers_mod.ValueMatchTable(
                    source_column=t["source_column"],
                    target_attribute=t["target_attribute"],
                    skipped=t.get("skipped", False),
                    matches=[
                        matchers_mod.ValueMatch(
                            source_value=e["source"],
                            target_value=e.get("target"),
                            score=e.get("score", 0.0),
                            corrected=e.get("corrected", False),
                            corrected_from=e.get("corrected_from"),
                        )
                        for e in t.get("matches", [])
                    ],
                )
            )
    spec = mapspec_mod.build_spec(column_matches, value_tables)
    text = mapspec_mod.serialize_spec(spec)
    if out is None or out == "-":
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


@main.command("validate-spec")
@click.option("--spec", required=True, type=click.Path())
@click.option("--source", required=True, type=click.Path())
@click.option("--vocab", required=True, type=click.Path())
@_fail_on_error
def validate_spec_cmd(spec, source, vocab):
    """Check a spec against a table and vocabulary; exit 1 on error diagnostics."""
    parsed = mapspec_mod.parse_spec(Path(spec).read_text(encoding="utf-8"))
    table = tablecore.load_table(source)
    schema = tablecore.load_vocabulary(vocab)
    diagnostics = mapspec_mod.validate_spec(parsed, table, schema)
    for d in diagnostics:
        where = f"entry {d.entry}: " if d.entry is not None else ""
        click.echo(f"{d.severity}: {where}{d.message}", err=d.severity == "error")
    if not diagnostics:
        click.echo("spec is clean")
    if mapspec_mod.has_errors(diagnostics):
        sys.exit(1)


@main.command("materialize")
@click.option("--spec", required=True, type=click.Path())
@click.option("--input", "input_", required=True, type=click.Path())
@click.option("--out", "-o", required=True, type=click.Path())
@_fail_on_error
def materialize_cmd(spec, input_, out):
    """Execute a mapping spec against a CSV, writing the harmonized CSV."""
    parsed = mapspec_mod.parse_spec(Path(spec).read_text(encoding="utf-8"))
    table = tablecore.load_table(input_)
    result = materialize_mod.materialize_mapping(table, parsed)
    materialize_mod.write_table(result, out)
    click.echo(f"wrote {out} ({len(result.rows)} rows, {len(result.columns)} columns)")


@main.command("union")
@click.option("--out", "-o", required=True, type=click.Path())
@click.argument("csvs", nargs=-1, required=True, type=click.Path())
@_fail_on_error
def union_cmd(out, csvs):
    """Concatenate CSVs over the ordered union of their columns."""
    parts = [tablecore.load_table(p) for p in csvs]
    result = materialize_mod.union_tables(parts, name=Path(out).stem)
    materialize_mod.write_table(result, out)
    click.echo(f"wrote {out} ({len(result.rows)} rows, {len(result.columns)} columns)")


@main.group()
def session():
    """Scripted, provenance-logged harmonization sessions."""


@session.command("run")
@click.option("--playbook", required=True, type=click.Path(), help="Playbook JSON.")
@click.option("--mock", type=click.Path(), help="MockReviewer corrections JSON.")
@click.option("--out-dir", default=".", show_default=True, type=click.Path())
@click.option("--provenance-dir", type=click.Path(), help="Defaults to --out-dir.")
@_fail_on_error
def session_run_cmd(playbook, mock, out_dir, provenance_dir):
    """Run the scripted planner end to end with the mock reviewer."""
    result = run_playbook(playbook, mock, out_dir, provenance_dir)
    for name in sorted(result.state.artifacts):
        click.echo(f"artifact: {Path(out_dir) / name}")
    click.echo(f"provenance: {result.log.path}")


@session.command("replay")
@click.option("--log", "log_path", required=True, type=click.Path(), help="Provenance JSONL file.")
@click.option("--base-dir", type=click.Path(), help="Directory input paths are relative to.")
@_fail_on_error
def session_replay_cmd(log_path, base_dir):
    """Replay a session log and print the reproduced mapping spec."""
    log = ProvenanceLog.load(log_path)
    spec = replay(log, base_dir=base_dir)
    click.echo(mapspec_mod.serialize_spec(spec), nl=False)


@main.command("eval")
@click.option("--task", required=True, type=click.Choice(["schema_matching", "value_mapping"]))
@click.option("--pred", required=True, type=click.Path())
@click.option("--truth", required=True, type=click.Path())
@click.option("--out", "-o", help="Also write the report as JSON.")
@_fail_on_error
def eval_cmd(task, pred, truth, out):
    """Score predictions against a truth mapping."""
    report = eval_mod.evaluate(
        eval_mod.load_mapping_file(pred), eval_mod.load_mapping_file(truth), task
    )
    click.echo(eval_mod.render_report(report))
    if out:
        _write_json(out, report.to_json())


@main.command("serve")
@click.option("--port", type=int, help="Overrides the config file.")
@click.option("--host", help="Overrides the config file.")
@click.option("--config", "config_path", type=click.Path(), help="harmonkit.toml location.")
@_fail_on_error
def serve_cmd(port, host, config_path):
    """Run the HTTP session API (and the review UI when built)."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    app = create_app(config)
    uvicorn.run(app, host=host or config.host, port=port or config.port, log_level="info")


if __name__ == "__main__":
    main()
