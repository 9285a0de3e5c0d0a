# src/greenwave/cli.py
"""greenwave command line: train, evaluate, replay, validate and config."""

from __future__ import annotations

import json
import logging
import os
import sqlite3
from dataclasses import fields
from pathlib import Path

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from greenwave.config import GreenwaveConfig, load_config
from greenwave.harness import (
    DEMAND_LEVEL_HOURS,
    EvaluationResult,
    MissingQTableError,
    TrainingDivergedError,
    evaluate,
    load_tables,
    replay,
    save_tables,
    train,
)
from greenwave.metrics import METRIC_NAMES, improvement
from greenwave.qstore import SchemaVersionError
from greenwave.scenarios import resolve_scenario
from greenwave.storage import (
    CONVERGENCE_COLUMNS,
    REPORT_COLUMNS,
    OutputStore,
    TraceError,
    TraceLog,
    write_csv,
)
from greenwave.topology import (
    INCIDENT_MODES,
    ScenarioConfig,
    ScenarioParseError,
    ScenarioValidationError,
)

app = typer.Typer(
    name="greenwave",
    help="greenwave: corridor simulation with learned signal timing and green-wave offsets",
    invoke_without_command=True,
)

console = Console()

LOG_LEVEL_ENV = "GREENWAVE_LOG_LEVEL"

_SCENARIO_ERRORS = (ScenarioParseError, ScenarioValidationError, FileNotFoundError, KeyError)


def _configure_logging() -> None:
    root = logging.getLogger()
    if any(isinstance(handler, RichHandler) for handler in root.handlers):
        return
    level = os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
    handler = RichHandler(console=Console(stderr=True), show_path=False)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level if level in logging.getLevelNamesMapping() else "WARNING")


@app.callback()
def main():
    """greenwave: corridor simulation with learned signal timing and green-wave offsets."""
    _configure_logging()


# --- Helper functions ---


def _load_config_or_exit(config_path: Path | None) -> GreenwaveConfig:
    try:
        return load_config(config_path)
    except (ValueError, TypeError) as exc:
        console.print(f"[red]Invalid config:[/red] {exc}")
        raise typer.Exit(code=1) from exc


def _load_scenario_or_exit(value: str) -> ScenarioConfig:
    try:
        return resolve_scenario(value)
    except _SCENARIO_ERRORS as exc:
        console.print(f"[red]Cannot load scenario {value}:[/red] {exc}")
        raise typer.Exit(code=1) from exc


def _check_choice(name: str, value: str | None, choices: tuple[str, ...]) -> None:
    if value is not None and value not in choices:
        console.print(f"[red]Invalid {name}:[/red] {value} (choose from {', '.join(choices)})")
        raise typer.Exit(code=1)


def _format_value(value: float, baseline: float | None) -> str:
    if baseline is None:
        return f"{value:.1f}"
    change = improvement(value, baseline)
    if change is None:
        return f"{value:.1f}"
    return f"{value:.1f} ({change:.0f}%)"


def _comparison_table(result: EvaluationResult) -> Table:
    """One row per strategy and metric; brackets give the improvement over fixed-time control."""
    summaries = result.summaries()
    baseline = summaries.get("fac")
    table = Table(title=f"{result.scenario}: {result.demand_level} demand, incident {result.incident}")
    table.add_column("Strategy", style="cyan")
    table.add_column("Metric", style="blue")
    table.add_column("Mean", justify="right")
    table.add_column("Std", justify="right", style="dim")
    for strategy in result.strategies:
        for name in METRIC_NAMES:
            summary = summaries[strategy][name]
            reference = baseline[name].mean if baseline is not None and strategy != "fac" else None
            table.add_row(strategy, name, _format_value(summary.mean, reference), f"{summary.std:.1f}")
    return table


# --- Commands ---


@app.command("train")
def train_cmd(
    scenario: str = typer.Option("desk", "--scenario", help="Built-in scenario name or scenario file"),
    seed: int | None = typer.Option(None, "--seed", help="Training seed (default: the scenario seed)"),
    episodes: int | None = typer.Option(None, "--episodes", help="Episode budget (default: training.max_episodes)"),
    start_episode: int = typer.Option(0, "--start-episode", help="Episode number to continue from"),
    incident: str | None = typer.Option(None, "--incident", help="off, fixed or stochastic"),
    qtable_in: Path | None = typer.Option(None, "--qtable-in", help="Directory with q-tables to keep training"),
    qtable_out: Path | None = typer.Option(None, "--qtable-out", help="Directory to write the trained q-tables"),
    log_out: Path | None = typer.Option(None, "--out", help="Convergence log CSV"),
    trace_path: Path | None = typer.Option(None, "--trace", help="Write a JSON Lines trace of every episode"),
    config_path: Path | None = typer.Option(None, "--config", help="Config file"),
    json_output: bool = typer.Option(False, "--json", help="Output as JSON"),
) -> None:
    """Train the TSC and DSO agents on a scenario."""
    _check_choice("incident mode", incident, INCIDENT_MODES)
    config = _load_config_or_exit(config_path)
    corridor = _load_scenario_or_exit(scenario)
    store = OutputStore(config.general.data_dir)

    try:
        tables = load_tables(qtable_in) if qtable_in is not None else None
        result = train(
            corridor,
            config,
            episodes=episodes,
            seed=seed,
            tables=tables,
            incident_mode=incident,
            first_episode=start_episode,
            keep_records=trace_path is not None,
        )
    except (MissingQTableError, SchemaVersionError, sqlite3.DatabaseError, TrainingDivergedError, ValueError) as exc:
        console.print(f"[red]Training failed:[/red] {exc}")
        raise typer.Exit(code=1) from exc

    tables_dir = qtable_out or store.qtable_dir(corridor.name)
    tsc_path, dso_path = save_tables(result.tables, tables_dir)
    log_path = write_csv(
        log_out or store.convergence_path(corridor.name), CONVERGENCE_COLUMNS, [s.as_row() for s in result.log]
    )
    if trace_path is not None:
        trace = TraceLog()
        trace.extend(result.records)
        trace.write(trace_path)

    if json_output:
        typer.echo(
            json.dumps(
                {
                    "episodes": len(result.log),
                    "converged": result.converged,
                    "tsc_table": str(tsc_path),
                    "dso_table": str(dso_path),
                    "log": str(log_path),
                }
            )
        )
        return

    console.print(f"[green]Episodes:[/green] {len(result.log)}")
    console.print(f"[green]Converged:[/green] {'Yes' if result.converged else 'No'}")
    console.print(f"[cyan]Q-tables:[/cyan] {tables_dir}")
    console.print(f"[cyan]Convergence log:[/cyan] {log_path}")


@app.command("evaluate")
def evaluate_cmd(
    scenario: str = typer.Option("desk", "--scenario", help="Built-in scenario name or scenario file"),
    arterial_control: list[str] | None = typer.Option(
        None, "--arterial-control", help="fac, maxband, qac or qacu; repeat for several (default: scenario roster)"
    ),
    incident: str | None = typer.Option(None, "--incident", help="off, fixed or stochastic"),
    demand_level: str | None = typer.Option(None, "--demand-level", help="low, moderate or high"),
    replications: int | None = typer.Option(None, "--replications", help="Seeded runs per strategy"),
    seed: int | None = typer.Option(None, "--seed", help="Base seed for the replication seeds"),
    qtable_in: Path | None = typer.Option(None, "--qtable-in", help="Directory with trained q-tables"),
    out: Path | None = typer.Option(None, "--out", help="Report CSV"),
    trace_path: Path | None = typer.Option(None, "--trace", help="Write a JSON Lines trace of every run"),
    dump_plans: Path | None = typer.Option(None, "--dump-plans", help="Write the per-cycle signal plans as JSON Lines"),
    config_path: Path | None = typer.Option(None, "--config", help="Config file"),
    json_output: bool = typer.Option(False, "--json", help="Output as JSON"),
) -> None:
    """Evaluate control strategies; exits 1 if any metric had no samples."""
    _check_choice("incident mode", incident, INCIDENT_MODES)
    _check_choice("demand level", demand_level, tuple(DEMAND_LEVEL_HOURS))
    config = _load_config_or_exit(config_path)
    corridor = _load_scenario_or_exit(scenario)
    strategies = tuple(arterial_control) if arterial_control else corridor.control.arterial
    store = OutputStore(config.general.data_dir)

    try:
        tables = load_tables(qtable_in) if qtable_in is not None else None
        result = evaluate(
            corridor,
            config,
            strategies=strategies,
            tables=tables,
            demand_level=demand_level,
            incident_mode=incident,
            replications=replications,
            base_seed=seed,
        )
    except (MissingQTableError, SchemaVersionError, sqlite3.DatabaseError, ValueError) as exc:
        console.print(f"[red]Evaluation failed:[/red] {exc}")
        raise typer.Exit(code=1) from exc

    report_path = write_csv(
        out or store.report_path(corridor.name, result.demand_level, result.incident), REPORT_COLUMNS, result.rows()
    )
    if trace_path is not None:
        trace = TraceLog()
        trace.extend(result.records())
        trace.write(trace_path)
    if dump_plans is not None:
        plans = TraceLog()
        plans.extend(record for record in result.records() if record["event"] == "plan")
        plans.write(dump_plans)

    if json_output:
        summaries = result.summaries()
        typer.echo(
            json.dumps(
                {
                    "report": str(report_path),
                    "flagged": result.flagged,
                    "strategies": {
                        strategy: {name: summaries[strategy][name].mean for name in METRIC_NAMES}
                        for strategy in result.strategies
                    },
                }
            )
        )
    else:
        console.print(_comparison_table(result))
        console.print(f"[cyan]Report:[/cyan] {report_path}")

    if result.flagged:
        console.print("[red]Some metrics had no qualifying samples; see the flagged column.[/red]")
        raise typer.Exit(code=1)


@app.command("replay")
def replay_cmd(
    trace_path: Path = typer.Argument(..., help="Trace file written by --trace"),
    json_output: bool = typer.Option(False, "--json", help="Output as JSON"),
) -> None:
    """Print a trace as a per-cycle timeline."""
    try:
        rows = replay(trace_path)
    except (FileNotFoundError, TraceError) as exc:
        console.print(f"[red]Cannot replay:[/red] {exc}")
        raise typer.Exit(code=1) from exc

    if json_output:
        typer.echo(
            json.dumps(
                [
                    {
                        "strategy": row.strategy,
                        "seed": row.seed,
                        "t": row.time,
                        "cycles": list(row.cycles),
                        "offsets": list(row.offsets),
                        "tsc_reward": row.tsc_reward,
                        "dso_reward": row.dso_reward,
                        "offramp_queue": row.offramp_queue,
                        "approach_queue": row.approach_queue,
                        "incidents": list(row.incidents),
                    }
                    for row in rows
                ]
            )
        )
        return

    if not rows:
        console.print("[dim]Empty trace.[/dim]")
        return

    def fmt(value: float | None, digits: int = 1) -> str:
        return "-" if value is None else f"{value:.{digits}f}"

    table = Table(title=f"Replay of {trace_path.name}")
    table.add_column("Run", style="cyan")
    table.add_column("t (s)", justify="right")
    table.add_column("Cycles", style="blue")
    table.add_column("Offsets")
    table.add_column("TSC reward", justify="right", style="green")
    table.add_column("DSO reward", justify="right", style="green")
    table.add_column("Off-ramp queue (m)", justify="right")
    table.add_column("Approach queue (m)", justify="right")
    table.add_column("Incidents", style="red")
    for row in rows:
        table.add_row(
            f"{row.strategy}/{row.seed}",
            f"{row.time:g}",
            " ".join(f"{c:g}" for c in row.cycles),
            " ".join(f"{o:g}" for o in row.offsets),
            fmt(row.tsc_reward, 3),
            fmt(row.dso_reward, 3),
            fmt(row.offramp_queue),
            fmt(row.approach_queue),
            ", ".join(row.incidents),
        )
    console.print(table)


@app.command("validate")
def validate_cmd(
    scenario: str = typer.Argument(..., help="Built-in scenario name or scenario file"),
) -> None:
    """Check a scenario against every topology invariant."""
    try:
        corridor = resolve_scenario(scenario)
    except ScenarioValidationError as exc:
        table = Table(title=f"{scenario}: {len(exc.diagnostics)} problem(s)")
        table.add_column("Kind", style="yellow")
        table.add_column("Location", style="cyan")
        table.add_column("Message", style="red")
        for diagnostic in exc.diagnostics:
            table.add_row(diagnostic.kind, diagnostic.location, diagnostic.message)
        console.print(table)
        raise typer.Exit(code=1) from exc
    except (ScenarioParseError, FileNotFoundError, KeyError) as exc:
        console.print(f"[red]Cannot load scenario {scenario}:[/red] {exc}")
        raise typer.Exit(code=1) from exc

    console.print(
        f"[green]Valid:[/green] {corridor.name} with {corridor.K} intersection(s), "
        f"{len(corridor.links)} link(s), {len(corridor.cells)} freeway cell(s), {len(corridor.ramps)} ramp(s)"
    )


@app.command("config")
def config_cmd(
    config_path: Path | None = typer.Option(None, "--config", help="Config file"),
) -> None:
    """Print the resolved configuration."""
    config = _load_config_or_exit(config_path)

    console.print("[bold]Resolved Configuration[/bold]\n")
    for section in fields(config):
        values = getattr(config, section.name)
        for item in fields(values):
            console.print(f"[cyan]{section.name}.{item.name}[/cyan] = {getattr(values, item.name)}")
