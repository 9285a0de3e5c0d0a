"""Training and evaluation runs over a scenario.

A run warms up under the default fixed-time plans, then makes one control
decision every control cycle: the detectors of the cycle that just ended are
observed, the controller picks plans and recommended speeds, and the world is
advanced to the next decision.

Replication seeds come from ``derive_seed(base_seed, replication)``, a
``numpy.random.SeedSequence`` split of the base seed, and are shared by every
strategy so strategies are compared on the same random demand.
"""

from __future__ import annotations

import asyncio
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from greenwave.agents import (
    ALL_TSC_ACTIONS,
    DSO_ACTION_COUNT,
    TSC_ACTION_COUNT,
    DsoObservation,
    TscObservation,
    admissible_dso_actions,
    discretize_dso,
    discretize_tsc,
    dso_action,
    dso_reward,
    travel_time_or_window,
    tsc_action,
    tsc_reward,
)
from greenwave.baselines import fixed_time_plan, maxband_plans
from greenwave.config import GreenwaveConfig, LearningConfig
from greenwave.coordinator import unify
from greenwave.metrics import METRIC_NAMES, MetricsReport, MetricSummary, build_report, summarize
from greenwave.qlearning import QTable, Transition, converged, greedy_select, softmax_select, update
from greenwave.qstore import persist, restore
from greenwave.signals import SignalPlan, apply_offset, compute_splits, plan_to_dict
from greenwave.simulation import (
    NORTHBOUND,
    SOUTHBOUND,
    IncidentState,
    WindowObservation,
    World,
    default_capacity_factor,
    draw_incidents,
    observe,
)
from greenwave.storage import read_jsonl
from greenwave.topology import ARTERIAL_STRATEGIES, INCIDENT_MODES, ScenarioConfig

logger = logging.getLogger(__name__)

DEMAND_LEVEL_HOURS = {"low": 1, "moderate": 12, "high": 17}
TSC_TABLE_FILE = "tsc.sqlite"
DSO_TABLE_FILE = "dso.sqlite"
LEARNED_STRATEGIES = ("qac", "qacu")


class TrainingDivergedError(RuntimeError):
    """A reward or Q-value left its valid range during training."""


class MissingQTableError(ValueError):
    """A learned strategy was requested without trained tables."""


def derive_seed(base_seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([base_seed, *keys]).generate_state(1)[0])


# --- Q-tables ---


@dataclass
class AgentTables:
    tsc: QTable
    dso: QTable


def new_tables(learning: LearningConfig, seed: int) -> AgentTables:
    def table(name: str, action_count: int, key: int) -> QTable:
        return QTable(
            name=name,
            action_count=action_count,
            seed=derive_seed(seed, key),
            discount=learning.discount,
            temperature=learning.temperature,
            threshold=learning.convergence_threshold,
            min_visits=learning.min_visits,
        )

    return AgentTables(tsc=table("tsc", TSC_ACTION_COUNT, 0), dso=table("dso", DSO_ACTION_COUNT, 1))


def save_tables(tables: AgentTables, directory: Path) -> tuple[Path, Path]:
    return persist(tables.tsc, directory / TSC_TABLE_FILE), persist(tables.dso, directory / DSO_TABLE_FILE)


def load_tables(directory: Path) -> AgentTables:
    missing = [name for name in (TSC_TABLE_FILE, DSO_TABLE_FILE) if not (directory / name).exists()]
    if missing:
        raise MissingQTableError(f"{directory} is missing {', '.join(missing)}")
    return AgentTables(tsc=restore(directory / TSC_TABLE_FILE), dso=restore(directory / DSO_TABLE_FILE))


# --- Controllers ---


@dataclass(frozen=True)
class CycleDecision:
    plans: dict[int, SignalPlan]
    speeds: dict[tuple[int, str], float] = field(default_factory=dict)
    rewards: dict[str, dict[int, float]] = field(default_factory=dict)


class Controller:
    name = "controller"

    def decide(self, world: World, window: WindowObservation) -> CycleDecision:
        raise NotImplementedError

    def finish(self, world: World, window: WindowObservation) -> dict[str, dict[int, float]]:
        """Close out the last control cycle; returns the rewards it earned."""
        return {}


class FixedPlanController(Controller):
    """Runs the same plans every cycle (fixed-time and MAXBAND)."""

    def __init__(self, name: str, plans: dict[int, SignalPlan]):
        self.name = name
        self.plans = plans

    def decide(self, world: World, window: WindowObservation) -> CycleDecision:
        return CycleDecision(plans=dict(self.plans))


@dataclass(frozen=True)
class _Pending:
    state: int
    action: int


class LearningController(Controller):
    """TSC and DSO agents sharing one table per agent class.

    With ``explore`` set, actions come from softmax and every completed cycle
    updates the tables: K TSC backups and K - 1 DSO backups. Without it,
    selection is greedy and the tables are only read.
    """

    def __init__(
        self,
        name: str,
        tables: AgentTables,
        world: World,
        explore: bool = False,
        unified: bool = False,
    ):
        self.name = name
        self.tables = tables
        self.params = world.control
        self.loss_time = world.control.loss_time
        self.explore = explore
        self.unified = unified
        self.nodes = sorted(node.id for node in world.scenario.intersections)
        self.links = sorted(world.scenario.links, key=lambda link: link.id)
        self._tsc_pending: dict[int, _Pending] = {}
        self._dso_pending: dict[int, _Pending] = {}
        self.deltas: list[float] = []
        self.tsc_rewards: list[float] = []
        self.dso_rewards: list[float] = []

    def _select(self, table: QTable, state: int, actions: Sequence[int]) -> int:
        if self.explore:
            return softmax_select(table, state, actions)
        return greedy_select(table, state, actions)

    def _learn(self, table: QTable, pending: _Pending, reward: float, state: int, actions: Sequence[int]) -> None:
        try:
            transition = Transition(pending.state, pending.action, reward, state, tuple(actions))
        except ValueError as exc:
            logger.error("Diverged on %s state %d action %d: %s", table.name, pending.state, pending.action, exc)
            raise TrainingDivergedError(f"{table.name} reward {reward!r} is not a valid reward") from exc
        delta = update(table, transition)
        if not math.isfinite(delta):
            logger.error("Diverged on %s state %d action %d", table.name, pending.state, pending.action)
            raise TrainingDivergedError(f"{table.name} Q-value for state {pending.state} is no longer finite")
        self.deltas.append(delta)

    def _tsc_step(self, window: WindowObservation, choose: bool) -> tuple[dict[int, int], dict[int, float]]:
        length = window.end - window.start
        chosen, rewards = {}, {}
        for k in self.nodes:
            obs = window.intersections[k]
            raw = TscObservation(obs.offramp_queue, obs.demands["S"], obs.demands["E"], obs.demands["N"], obs.demands["W"])
            _, state = discretize_tsc(raw)
            pending = self._tsc_pending.pop(k, None)
            if pending is not None:
                reward = tsc_reward(obs.offramp_queue, travel_time_or_window(obs.area_samples, length), self.params)
                rewards[k] = reward
                self.tsc_rewards.append(reward)
                if self.explore:
                    self._learn(self.tables.tsc, pending, reward, state, ALL_TSC_ACTIONS)
            if choose:
                action = self._select(self.tables.tsc, state, ALL_TSC_ACTIONS)
                self._tsc_pending[k] = _Pending(state, action)
                chosen[k] = action
        return chosen, rewards

    def _dso_step(
        self, window: WindowObservation, plans: dict[int, SignalPlan], choose: bool
    ) -> tuple[dict[tuple[int, str], float], dict[int, float]]:
        speeds, rewards = {}, {}
        for link in self.links:
            up, down = link.upstream_intersection, link.downstream_intersection
            upstream_queue = window.intersections[up].approach_queues["S"]
            downstream_queue = window.intersections[down].approach_queues["S"]
            raw = DsoObservation(plans[up].cycle, plans[down].cycle, upstream_queue, downstream_queue, link.length)
            _, state = discretize_dso(raw)
            actions = admissible_dso_actions(int(plans[up].cycle))
            pending = self._dso_pending.pop(link.id, None)
            if pending is not None:
                travel_time = travel_time_or_window(window.links[link.id].samples, window.end - window.start)
                reward = dso_reward(upstream_queue, downstream_queue, travel_time, link.length, self.params)
                rewards[link.id] = reward
                self.dso_rewards.append(reward)
                if self.explore:
                    self._learn(self.tables.dso, pending, reward, state, actions)
            if choose:
                action_id = self._select(self.tables.dso, state, actions)
                self._dso_pending[link.id] = _Pending(state, action_id)
                action = dso_action(action_id)
                # Links are walked south to north so the upstream plan already carries its offset.
                plans[down] = apply_offset(plans[down], action.offset, plans[up])
                speeds[(link.id, NORTHBOUND)] = action.downstream_speed
                speeds[(link.id, SOUTHBOUND)] = action.upstream_speed
        return speeds, rewards

    def decide(self, world: World, window: WindowObservation) -> CycleDecision:
        chosen, tsc_rewards = self._tsc_step(window, choose=True)
        intended = [tsc_action(chosen[k]) for k in self.nodes]
        actions = unify(intended, self.unified)
        plans = {k: compute_splits(action, self.loss_time) for k, action in zip(self.nodes, actions)}
        speeds, dso_rewards = self._dso_step(window, plans, choose=True)
        return CycleDecision(plans=plans, speeds=speeds, rewards={"tsc": tsc_rewards, "dso": dso_rewards})

    def finish(self, world: World, window: WindowObservation) -> dict[str, dict[int, float]]:
        _, tsc_rewards = self._tsc_step(window, choose=False)
        plans = {k: world.plan(k) for k in self.nodes}
        _, dso_rewards = self._dso_step(window, plans, choose=False)
        return {"tsc": tsc_rewards, "dso": dso_rewards}


# --- Running ---


def _window_queues(window: WindowObservation, world: World) -> dict:
    ramps = [obs.offramp_queue for k, obs in sorted(window.intersections.items()) if world.scenario.ramp_at(k, "off")]
    approaches = [q for _, obs in sorted(window.intersections.items()) for _, q in sorted(obs.approach_queues.items())]
    return {
        "offramp": float(np.mean(ramps)) if ramps else 0.0,
        "approach": float(np.mean(approaches)) if approaches else 0.0,
    }


def _reward_records(label: dict, t: float, rewards: dict[str, dict[int, float]]) -> list[dict]:
    return [
        {**label, "event": "reward", "t": t, "agent": agent, "id": key, "value": value}
        for agent in ("tsc", "dso")
        for key, value in sorted(rewards.get(agent, {}).items())
    ]


def run_controlled(
    world: World, controller: Controller, warmup: float, end: float, label: dict | None = None
) -> list[dict]:
    """Run ``world`` to ``end`` under ``controller``; returns the per-cycle trace records."""
    label = label or {}
    cycle = world.control.control_cycle
    records: list[dict] = []
    world.run_until(warmup)
    t = float(warmup)
    while t < end:
        window = observe(world, t - cycle, t)
        decision = controller.decide(world, window)
        world.apply_plans(decision.plans)
        world.set_recommended_speeds(decision.speeds)
        records.append({**label, "event": "cycle", "t": t})
        records.extend(
            {**label, "event": "plan", "t": t, "intersection": k, **plan_to_dict(plan)}
            for k, plan in sorted(decision.plans.items())
        )
        records.extend(_reward_records(label, t, decision.rewards))
        records.append({**label, "event": "queues", "t": t, **_window_queues(window, world)})
        world.forget_before(t)
        world.run_until(min(t + cycle, end))
        t += cycle
    last = observe(world, t - cycle, world.time)
    records.extend(_reward_records(label, float(world.time), controller.finish(world, last)))
    records.extend({**label, **event} for event in world.events)
    return records


def incident_cell(scenario: ScenarioConfig) -> int | None:
    if scenario.incident.cell is not None:
        return scenario.incident.cell
    if not scenario.cells:
        return None
    return sorted(cell.id for cell in scenario.cells)[len(scenario.cells) // 2]


def _capacity_factor(scenario: ScenarioConfig, cell_id: int) -> float:
    if scenario.incident.capacity_factor is not None:
        return scenario.incident.capacity_factor
    return default_capacity_factor(next(c for c in scenario.cells if c.id == cell_id))


def evaluation_incidents(scenario: ScenarioConfig, mode: str, seed: int) -> list[IncidentState]:
    """The scenario's incident window, always for ``fixed`` and with its probability for ``stochastic``."""
    if mode not in INCIDENT_MODES:
        raise ValueError(f"incident mode must be one of {INCIDENT_MODES}, got {mode!r}")
    if mode == "off":
        return []
    cell = incident_cell(scenario)
    if cell is None:
        raise ValueError(f"scenario {scenario.name} has no freeway cell for an incident")
    if mode == "stochastic":
        if np.random.default_rng(derive_seed(seed, 1)).random() >= scenario.incident.probability:
            return []
    start = scenario.incident.start
    return [IncidentState(cell, _capacity_factor(scenario, cell), start, start + scenario.incident.duration)]


# --- Training ---


@dataclass(frozen=True)
class EpisodeStats:
    episode: int
    start_hour: int
    tsc_mean_reward: float
    dso_mean_reward: float
    tsc_updates: int
    dso_updates: int
    max_delta: float
    mean_delta: float
    incidents: int
    converged: bool

    def as_row(self) -> dict:
        return {
            "episode": self.episode,
            "start_hour": self.start_hour,
            "tsc_mean_reward": self.tsc_mean_reward,
            "dso_mean_reward": self.dso_mean_reward,
            "tsc_updates": self.tsc_updates,
            "dso_updates": self.dso_updates,
            "max_delta": self.max_delta,
            "mean_delta": self.mean_delta,
            "incidents": self.incidents,
            "converged": self.converged,
        }


@dataclass
class TrainingResult:
    tables: AgentTables
    log: list[EpisodeStats]
    records: list[dict] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return bool(self.log) and self.log[-1].converged


def tables_converged(tables: AgentTables, has_links: bool) -> bool:
    return converged(tables.tsc) and (converged(tables.dso) or not has_links)


def train(
    scenario: ScenarioConfig,
    config: GreenwaveConfig,
    episodes: int | None = None,
    seed: int | None = None,
    tables: AgentTables | None = None,
    incident_mode: str | None = None,
    first_episode: int = 0,
    keep_records: bool = False,
) -> TrainingResult:
    """Train the shared TSC and DSO tables with exploration and without unification.

    Episode ``e`` starts at hour ``start_hour + e * window_shift_hours`` and
    draws a freeway incident at the top of each simulated hour. Training stops
    after ``episodes`` (default ``max_episodes``) or at the first periodic
    check where both tables have converged.
    """
    training = config.training
    seed = scenario.seed if seed is None else seed
    tables = tables or new_tables(config.learning, seed)
    episodes = training.max_episodes if episodes is None else episodes
    mode = scenario.incident.mode if incident_mode is None else incident_mode
    cell = incident_cell(scenario) if mode != "off" else None
    has_links = bool(scenario.links)

    log: list[EpisodeStats] = []
    records: list[dict] = []
    for episode in range(first_episode, first_episode + episodes):
        start_hour = (training.start_hour + episode * training.window_shift_hours) % 24
        episode_seed = derive_seed(seed, episode)
        incidents = []
        if cell is not None:
            incidents = draw_incidents(
                np.random.default_rng(derive_seed(episode_seed, 1)),
                next(c for c in scenario.cells if c.id == cell),
                training.episode_hours,
                training.incident_probability,
                training.incident_duration,
                scenario.incident.capacity_factor,
            )
        world = World(
            scenario, config.simulation, config.control, seed=episode_seed, start_hour=start_hour, incidents=incidents
        )
        controller = LearningController("train", tables, world, explore=True, unified=False)
        logger.info("Episode %d starting at hour %d with %d incidents", episode, start_hour, len(incidents))
        label = {"strategy": "train", "seed": episode_seed, "episode": episode}
        episode_records = run_controlled(world, controller, training.warmup, training.episode_length, label)
        if keep_records:
            records.extend(episode_records)

        check = (episode - first_episode + 1) % training.convergence_check_every == 0
        done = check and tables_converged(tables, has_links)
        deltas = controller.deltas
        stats = EpisodeStats(
            episode=episode,
            start_hour=start_hour,
            tsc_mean_reward=float(np.mean(controller.tsc_rewards)) if controller.tsc_rewards else 0.0,
            dso_mean_reward=float(np.mean(controller.dso_rewards)) if controller.dso_rewards else 0.0,
            tsc_updates=len(controller.tsc_rewards),
            dso_updates=len(controller.dso_rewards),
            max_delta=float(max(deltas)) if deltas else 0.0,
            mean_delta=float(np.mean(deltas)) if deltas else 0.0,
            incidents=len(incidents),
            converged=done,
        )
        log.append(stats)
        logger.info(
            "Episode %d finished: TSC reward %.3f, DSO reward %.3f, max delta %.4f",
            episode,
            stats.tsc_mean_reward,
            stats.dso_mean_reward,
            stats.max_delta,
        )
        if done:
            logger.info("Converged after episode %d", episode)
            break
    return TrainingResult(tables=tables, log=log, records=records)


# --- Evaluation ---


@dataclass(frozen=True)
class RunResult:
    strategy: str
    replication: int
    seed: int
    report: MetricsReport
    records: list[dict]


@dataclass
class EvaluationResult:
    scenario: str
    demand_level: str
    incident: str
    strategies: tuple[str, ...]
    runs: list[RunResult]

    @property
    def flagged(self) -> bool:
        return any(run.report.flagged for run in self.runs)

    def reports(self, strategy: str) -> list[MetricsReport]:
        return [run.report for run in self.runs if run.strategy == strategy]

    def summaries(self) -> dict[str, dict[str, MetricSummary]]:
        return {strategy: summarize(self.reports(strategy)) for strategy in self.strategies}

    def records(self) -> list[dict]:
        return [record for run in self.runs for record in run.records]

    def rows(self) -> list[dict]:
        """Report CSV rows: one per run, then mean and std rows per strategy."""
        base = {"scenario": self.scenario, "demand_level": self.demand_level, "incident": self.incident}
        rows = []
        for run in self.runs:
            report = run.report
            rows.append(
                {
                    **base,
                    "strategy": run.strategy,
                    "replication": run.replication,
                    "seed": run.seed,
                    **report.values(),
                    "freeway_samples": report.freeway_travel_time.samples,
                    "arterial_samples": report.arterial_travel_time.samples,
                    "flagged": report.flagged,
                }
            )
        for strategy, summary in self.summaries().items():
            reports = self.reports(strategy)
            totals = {
                "freeway_samples": sum(r.freeway_travel_time.samples for r in reports),
                "arterial_samples": sum(r.arterial_travel_time.samples for r in reports),
                "flagged": any(r.flagged for r in reports),
            }
            for statistic in ("mean", "std"):
                rows.append(
                    {
                        **base,
                        "strategy": strategy,
                        "replication": statistic,
                        "seed": "",
                        **{name: getattr(summary[name], statistic) for name in METRIC_NAMES},
                        **totals,
                    }
                )
        return rows


def build_controller(
    strategy: str,
    world: World,
    config: GreenwaveConfig,
    tables: AgentTables | None,
    maxband: list[SignalPlan] | None = None,
) -> Controller:
    nodes = sorted(node.id for node in world.scenario.intersections)
    if strategy == "fac":
        plan = fixed_time_plan(config.baselines, config.control.loss_time)
        return FixedPlanController("fac", {k: plan for k in nodes})
    if strategy == "maxband":
        if maxband is None:
            raise ValueError("maxband needs precomputed plans")
        return FixedPlanController("maxband", dict(zip(nodes, maxband)))
    if strategy in LEARNED_STRATEGIES:
        if tables is None:
            raise MissingQTableError(f"{strategy} needs trained q-tables (--qtable-in)")
        return LearningController(strategy, tables, world, explore=False, unified=strategy == "qacu")
    raise ValueError(f"unknown arterial strategy {strategy!r}; expected one of {ARTERIAL_STRATEGIES}")


def run_evaluation(
    scenario: ScenarioConfig,
    config: GreenwaveConfig,
    strategy: str,
    replication: int,
    seed: int,
    start_hour: int,
    incident_mode: str,
    tables: AgentTables | None,
    maxband: list[SignalPlan] | None,
) -> RunResult:
    incidents = evaluation_incidents(scenario, incident_mode, seed)
    world = World(scenario, config.simulation, config.control, seed=seed, start_hour=start_hour, incidents=incidents)
    controller = build_controller(strategy, world, config, tables, maxband)
    label = {"strategy": strategy, "seed": seed}
    records = run_controlled(world, controller, scenario.warmup, scenario.duration, label)
    report = build_report(world.trace(scenario.warmup), config.emissions, scenario.name, strategy, seed)
    logger.info("Evaluation run %s replication %d (seed %d) finished", strategy, replication, seed)
    return RunResult(strategy=strategy, replication=replication, seed=seed, report=report, records=records)


async def evaluate_async(
    scenario: ScenarioConfig,
    config: GreenwaveConfig,
    strategies: Sequence[str] = ARTERIAL_STRATEGIES,
    tables: AgentTables | None = None,
    demand_level: str | None = None,
    incident_mode: str | None = None,
    replications: int | None = None,
    base_seed: int | None = None,
) -> EvaluationResult:
    """Run every (strategy, replication) pair concurrently using an asyncio.Semaphore.

    Each run owns its world; the Q-tables are only read. Results keep the
    order of ``strategies`` and replications regardless of completion order.
    """
    evaluation = config.evaluation
    level = demand_level or scenario.demand_level
    if level not in DEMAND_LEVEL_HOURS:
        raise ValueError(f"demand level must be one of {tuple(DEMAND_LEVEL_HOURS)}, got {level!r}")
    mode = incident_mode or scenario.incident.mode
    replications = evaluation.replications if replications is None else replications
    base_seed = evaluation.base_seed if base_seed is None else base_seed
    start_hour = DEMAND_LEVEL_HOURS[level]

    for strategy in strategies:
        if strategy not in ARTERIAL_STRATEGIES:
            raise ValueError(f"unknown arterial strategy {strategy!r}; expected one of {ARTERIAL_STRATEGIES}")
        if strategy in LEARNED_STRATEGIES and tables is None:
            raise MissingQTableError(f"{strategy} needs trained q-tables (--qtable-in)")
    maxband = None
    if "maxband" in strategies:
        maxband = maxband_plans(scenario, start_hour, config.baselines, config.control.loss_time, seed=base_seed)

    seeds = [derive_seed(base_seed, r) for r in range(replications)]
    semaphore = asyncio.Semaphore(evaluation.concurrent_runs)

    async def _run_with_semaphore(strategy: str, replication: int) -> RunResult:
        async with semaphore:
            return await asyncio.to_thread(
                run_evaluation,
                scenario,
                config,
                strategy,
                replication,
                seeds[replication],
                start_hour,
                mode,
                tables,
                maxband,
            )

    tasks = [_run_with_semaphore(strategy, r) for strategy in strategies for r in range(replications)]
    runs = await asyncio.gather(*tasks)
    return EvaluationResult(
        scenario=scenario.name, demand_level=level, incident=mode, strategies=tuple(strategies), runs=list(runs)
    )


def evaluate(scenario: ScenarioConfig, config: GreenwaveConfig, **kwargs) -> EvaluationResult:
    return asyncio.run(evaluate_async(scenario, config, **kwargs))


# --- Replay ---


@dataclass(frozen=True)
class CycleRow:
    strategy: str
    seed: int
    time: float
    cycles: tuple[float, ...]
    offsets: tuple[float, ...]
    tsc_reward: float | None
    dso_reward: float | None
    offramp_queue: float | None
    approach_queue: float | None
    incidents: tuple[str, ...]


def replay(path: Path) -> list[CycleRow]:
    """Group a trace file into one row per control cycle of each run, in file order.

    Rewards shown at time ``t`` score the cycle that ended at ``t``.
    """
    records = read_jsonl(path)
    order: list[tuple] = []
    cycles: dict[tuple, dict] = {}
    for record in records:
        key = (record.get("strategy", ""), record.get("seed", 0), record.get("t", 0.0))
        if key not in cycles:
            order.append(key)
            cycles[key] = {"plans": [], "tsc": [], "dso": [], "queues": None, "incidents": []}
        entry = cycles[key]
        event = record["event"]
        if event == "plan":
            entry["plans"].append((record["intersection"], record["cycle"], record["absolute_offset"]))
        elif event == "reward":
            entry[record["agent"]].append(record["value"])
        elif event == "queues":
            entry["queues"] = (record["offramp"], record["approach"])
        elif event == "incident":
            entry["incidents"].append(f"cell {record['cell']} {record['state']}")

    rows = []
    for key in order:
        entry = cycles[key]
        plans = sorted(entry["plans"])
        queues = entry["queues"] or (None, None)
        rows.append(
            CycleRow(
                strategy=key[0],
                seed=key[1],
                time=key[2],
                cycles=tuple(cycle for _, cycle, _ in plans),
                offsets=tuple(offset for _, _, offset in plans),
                tsc_reward=float(np.mean(entry["tsc"])) if entry["tsc"] else None,
                dso_reward=float(np.mean(entry["dso"])) if entry["dso"] else None,
                offramp_queue=queues[0],
                approach_queue=queues[1],
                incidents=tuple(entry["incidents"]),
            )
        )
    return rows
