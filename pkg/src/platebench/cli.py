"""Command-line interface: run sessions, evaluate, check, emit, calculate."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import agents, chem, checks, fixtures, hardware, report as report_mod
from .agents import parse_config_label, path_and_token_report, aggregate_reports
from .chem import SolutionSpec, StaticTableProvider, load_property_table
from .evaluate import evaluate
from .llm import ScriptedClient, transcript_to_stub
from .service import AppConfig
from .steps import render_procedure


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_generated(path: str, arrays=None):
    try:
        return fixtures.load_procedure_file(path, arrays)
    except (OSError, ValueError) as exc:
        _fail(f"cannot load procedure from {path}: {exc}")


def _ground_truth(ref: str, alt_order: bool):
    if fixtures.is_experiment_id(ref):
        return fixtures.load_ground_truth(ref, alt_order=alt_order)
    if alt_order:
        _fail("--alt-order applies only to bundled experiment ids")
    return _load_generated(ref)


@click.group()
def main():
    """Protocol generation, checking, evaluation and hardware emission."""


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


@main.command()
@click.option("--experiment", required=True, help="bundled experiment id (exp1..exp5) or a description file")
@click.option("--config", "config_label", default="MA-TU-GSC", show_default=True)
@click.option("--cognition", type=click.Choice(["NR", "PR", "FR"]), default="FR", show_default=True)
@click.option("--mode", type=click.Choice(["auto", "interactive"]), default="auto", show_default=True)
@click.option("--client", "client_kind", type=click.Choice(["stub", "http"]), default="stub", show_default=True)
@click.option("--stub-file", type=click.Path(exists=True), help="scripted replies for non-bundled experiments")
@click.option("--repeat", default=1, show_default=True)
@click.option("--turn-limit", default=agents.DEFAULT_TURN_LIMIT, show_default=True)
@click.option("--out-dir", type=click.Path(), help="write the metrics report and figures here")
def run(experiment, config_label, cognition, mode, client_kind, stub_file, repeat, turn_limit, out_dir):
    """Run a design session and print its metrics against ground truth."""
    try:
        config = parse_config_label(config_label, cognition)
    except ValueError as exc:
        raise click.UsageError(str(exc))

    exp_id = experiment if fixtures.is_experiment_id(experiment) else None
    if exp_id:
        description = fixtures.description_for(exp_id)
        context = fixtures.check_context_for(exp_id, auto_fix=True)
    else:
        path = Path(experiment)
        if not path.is_file():
            raise click.UsageError(f"{experiment} is neither an experiment id nor a file")
        description = path.read_text("utf-8").strip()
        context = None

    app_config = AppConfig.from_env()
    failures = 0
    reports = []
    for i in range(repeat):
        if client_kind == "stub":
            if stub_file:
                client = ScriptedClient.from_file(stub_file)
            elif exp_id:
                client = fixtures.stub_client(exp_id)
            else:
                raise click.UsageError("stub runs need a bundled experiment or --stub-file")
        else:
            client = app_config.http_client()

        state = agents.run_session(
            description,
            config,
            mode,
            client,
            models=app_config.models_for(cognition),
            turn_limit=turn_limit,
            check_context=context,
        )
        while state.status == "awaiting_user":
            answer = click.prompt("you")
            agents.resume_session(state, client, answer)
        if state.status == "awaiting_tags":
            provider = StaticTableProvider()
            suggestions = {
                idx: hardware.suggest_tags(step, provider)
                for idx, step in enumerate(state.finalized.steps)
            }
            agents.set_tags(state, suggestions, provider)
            click.echo("applied suggested hardware tags")

        path_report = path_and_token_report(state)
        reports.append(path_report)
        nodes = ">".join(a.value for a in state.path)
        click.echo(
            f"run {i + 1}/{repeat}: status {state.status}, turns {state.turns}, "
            f"path [{nodes}] length {path_report.length}, tokens {path_report.token_total}"
        )
        if state.status == "failed":
            failures += 1
            click.echo(f"  failure: {state.error}")
            continue
        if exp_id and state.finalized is not None:
            gt = fixtures.load_ground_truth(exp_id)
            result = evaluate(state.finalized, gt)
            spearman = "undefined" if result.spearman is None else f"{result.spearman:g}"
            nrmse = "undefined" if result.nrmse is None else f"{result.nrmse:g}"
            click.echo(
                f"  vs {exp_id}: precision {result.precision:.4f} recall "
                f"{result.recall:.4f} F1 = {result.f1:g} spearman {spearman} "
                f"nRMSE = {nrmse}"
            )
            if out_dir and i == repeat - 1:
                paths = report_mod.write_report(result, out_dir)
                out = Path(out_dir)
                (out / "transcript.json").write_text(
                    json.dumps([m.to_dict() for m in state.transcript], indent=2) + "\n",
                    encoding="utf-8",
                )
                (out / "replay_stub.json").write_text(
                    json.dumps(transcript_to_stub(state.transcript), indent=2) + "\n",
                    encoding="utf-8",
                )
                paths += [out / "transcript.json", out / "replay_stub.json"]
                click.echo("  report: " + ", ".join(str(p) for p in paths))

    if repeat > 1:
        total = aggregate_reports(reports)
        click.echo(f"aggregate over {repeat} runs: {json.dumps(total.to_dict())}")
    if failures:
        sys.exit(1)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


@main.command("eval")
@click.option("--generated", required=True, type=click.Path(exists=True))
@click.option("--ground-truth", "ground_truth", required=True,
              help="bundled experiment id (exp1..exp5) or a final-steps file")
@click.option("--alt-order", is_flag=True, help="use the alternative step ordering fixture")
@click.option("--out-dir", type=click.Path(), help="write metrics.json, amounts.csv and figures here")
@click.option("--no-figures", is_flag=True)
@click.option("--json", "as_json", is_flag=True, help="print the JSON report instead of the table")
def eval_command(generated, ground_truth, alt_order, out_dir, no_figures, as_json):
    """Compare a generated procedure against ground truth."""
    gen = _load_generated(generated)
    gt = _ground_truth(ground_truth, alt_order)
    result = evaluate(gen, gt)
    if as_json:
        click.echo(json.dumps(result.to_dict(), indent=2))
    else:
        click.echo(report_mod.format_table(result))
    if out_dir:
        paths = report_mod.write_report(result, out_dir, figures=not no_figures)
        click.echo("wrote: " + ", ".join(str(p) for p in paths))


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


@main.command()
@click.argument("steps_file", type=click.Path(exists=True))
@click.option("--guided/--unguided", default=True, show_default=True)
@click.option("--experiment", help="bundled experiment id supplying plate bindings and targets")
@click.option("--auto-fix", is_flag=True, help="apply deterministic repairs (guided mode)")
@click.option("--stub-file", type=click.Path(exists=True), help="scripted reviewer replies (unguided mode)")
@click.option("--json", "as_json", is_flag=True)
def check(steps_file, guided, experiment, auto_fix, stub_file, as_json):
    """Run self-checks over a final-steps file."""
    context = (
        fixtures.check_context_for(experiment, auto_fix=auto_fix)
        if experiment
        else checks.CheckContext(auto_fix=auto_fix)
    )
    proc = _load_generated(steps_file, context.arrays)
    if guided:
        outcome = checks.run_guided(proc, context)
    else:
        if stub_file:
            client = ScriptedClient.from_file(stub_file)
        else:
            client = AppConfig.from_env().http_client()
        outcome = checks.run_unguided(
            proc, [], agents.default_system_prompt(), client
        )
    if as_json:
        click.echo(json.dumps({
            "converged": outcome.converged,
            "iterations": outcome.iterations,
            "findings": [f.to_dict() for f in outcome.findings],
            "revised": render_procedure(outcome.revised),
        }, indent=2))
    else:
        click.echo(f"iterations: {outcome.iterations}  converged: {outcome.converged}")
        for finding in outcome.findings:
            where = "" if finding.step_index is None else f" (step {finding.step_index + 1})"
            click.echo(f"[{finding.severity}] {finding.check_id}{where}: {finding.message}")
        if not outcome.findings:
            click.echo("no findings")
        if auto_fix and outcome.revised.steps != proc.steps:
            click.echo(render_procedure(outcome.revised))
    if outcome.errors:
        sys.exit(1)


# ---------------------------------------------------------------------------
# emit
# ---------------------------------------------------------------------------


@main.command()
@click.option("--steps", "steps_file", required=True, type=click.Path(exists=True))
@click.option("--tags", "tags_file", type=click.Path(exists=True),
              help="JSON map of step index to tag set; defaults are suggested otherwise")
@click.option("--experiment", help="bundled experiment id supplying plate bindings")
@click.option("-o", "--output", required=True, type=click.Path())
def emit(steps_file, tags_file, experiment, output):
    """Translate a final-steps file into the hardware XML document."""
    arrays = {}
    if experiment:
        arrays = fixtures.plate_arrays(fixtures.load_meta(experiment))
    proc = _load_generated(steps_file, arrays)
    provider = StaticTableProvider()
    if tags_file:
        raw = json.loads(Path(tags_file).read_text("utf-8"))
        tags = {int(i): hardware.TagSet.from_dict(t) for i, t in raw.items()}
    else:
        tags = {idx: hardware.suggest_tags(step, provider) for idx, step in enumerate(proc.steps)}
    try:
        document = hardware.emit(proc, tags, provider)
    except (hardware.InvalidTagSet, hardware.ValidationFailed, chem.UnknownChemical) as exc:
        _fail(str(exc))
    Path(output).write_bytes(document)
    click.echo(f"wrote {output} ({len(document)} bytes)")


# ---------------------------------------------------------------------------
# calc
# ---------------------------------------------------------------------------


@main.group()
@click.option("--table", type=click.Path(exists=True), help="property table CSV overriding the bundled one")
@click.pass_context
def calc(ctx, table):
    """Stoichiometry calculations against the chemical property table."""
    ctx.obj = load_property_table(table) if table else StaticTableProvider()


def _calc_run(fn):
    try:
        value = fn()
    except (chem.UnknownChemical, ValueError) as exc:
        _fail(str(exc))
        return
    click.echo(f"{value:.2f}")


@calc.command()
@click.argument("name")
@click.argument("weight_mg", type=float)
@click.pass_obj
def volume(provider, name, weight_mg):
    """Volume (uL) of WEIGHT_MG milligrams of NAME."""
    _calc_run(lambda: chem.get_chem_volume(provider, name, weight_mg))


@calc.command("moles-volume")
@click.argument("name")
@click.argument("moles", type=float)
@click.pass_obj
def moles_volume(provider, name, moles):
    """Volume (uL) of MOLES of NAME."""
    _calc_run(lambda: chem.find_the_volume_corresponding_to_moles(provider, name, moles))


@calc.command("n-percent")
@click.argument("name")
@click.pass_obj
def n_percent(provider, name):
    """Molarity (mol/L) of an n% weight/volume solution such as '28% ammonia'."""
    _calc_run(lambda: chem.find_the_concentration_of_n_percent_solution(provider, name))


@calc.command("solution-amounts")
@click.argument("total_molarity", type=float)
@click.argument("molar_ratio", type=float)
@click.argument("volume_l", type=float)
@click.argument("chem1")
@click.argument("chem2")
@click.pass_obj
def solution_amounts(provider, total_molarity, molar_ratio, volume_l, chem1, chem2):
    """Amounts of CHEM1 and CHEM2 for a total molarity, ratio and volume."""
    try:
        first, second = chem.find_chemical_amounts_in_a_solution(
            provider, SolutionSpec(total_molarity, molar_ratio, volume_l), chem1, chem2
        )
    except (chem.UnknownChemical, ValueError) as exc:
        _fail(str(exc))
        return
    for amount in (first, second):
        click.echo(
            f"{amount.name}: {amount.canonical_value:.2f} {amount.canonical_unit} "
            f"(mass {amount.mass_mg:.2f} mg, volume {amount.volume_ul:.2f} uL)"
        )


@calc.command()
@click.argument("c1", type=float)
@click.argument("c2", type=float)
@click.argument("v2_l", type=float)
def dilution(c1, c2, v2_l):
    """Stock volume (uL) to dilute C1 mol/L down to C2 mol/L in V2_L litres."""
    _calc_run(lambda: chem.dilution_volume(c1, c2, v2_l))


@calc.command()
@click.argument("total_ul", type=float)
@click.argument("components", type=float, nargs=-1)
def remainder(total_ul, components):
    """Solvent volume (uL) left after the listed component volumes."""
    _calc_run(lambda: chem.solvent_remainder(total_ul, list(components)))


@calc.command()
@click.argument("total_ul", type=float)
@click.argument("target_percent", type=float)
@click.argument("stock_percent", type=float)
def split(total_ul, target_percent, stock_percent):
    """Split TOTAL_UL between an n% modifier stock and neat solvent."""
    try:
        stock, neat = chem.modifier_stock_split(total_ul, target_percent, stock_percent)
    except ValueError as exc:
        _fail(str(exc))
        return
    click.echo(f"stock: {stock:.2f}  neat solvent: {neat:.2f}")


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8131, show_default=True)
@click.option("--log-dir", default="sessions", show_default=True)
@click.option("--client", "client_kind", type=click.Choice(["stub", "http"]), default="stub", show_default=True)
@click.option("--fixture-dir", type=click.Path(exists=True))
def serve(host, port, log_dir, client_kind, fixture_dir):
    """Start the HTTP session service (REST + SSE)."""
    from .service import serve as run_service

    config = AppConfig.from_env(client_kind=client_kind, log_dir=log_dir)
    config.host = host
    config.port = port
    config.fixture_dir = fixture_dir
    run_service(config)


if __name__ == "__main__":
    main()
