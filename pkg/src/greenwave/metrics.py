"""Evaluation criteria computed from a finished run's trace.

Sums go through ``math.fsum`` so a metric does not depend on the order of the
trace records. A metric with no qualifying samples is reported with
``samples == 0`` and ``flagged`` set instead of a silent zero.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from greenwave.config import EmissionParams
from greenwave.simulation import SimulationTrace, VehicleRecord

logger = logging.getLogger(__name__)

METRIC_NAMES = (
    "freeway_travel_time",
    "arterial_travel_time",
    "average_stops",
    "emissions",
    "offramp_queue",
    "approach_queue",
)


@dataclass(frozen=True)
class MetricValue:
    value: float
    samples: int

    @property
    def flagged(self) -> bool:
        return self.samples == 0


@dataclass(frozen=True)
class MetricsReport:
    scenario: str
    strategy: str
    seed: int
    freeway_travel_time: MetricValue
    arterial_travel_time: MetricValue
    average_stops: MetricValue
    emissions: MetricValue
    offramp_queue: MetricValue
    approach_queue: MetricValue
    not_applicable: tuple[str, ...] = ()

    @property
    def empty_metrics(self) -> list[str]:
        """Metrics the network could produce but the run left without samples."""
        return [
            name for name in METRIC_NAMES if name not in self.not_applicable and getattr(self, name).flagged
        ]

    @property
    def flagged(self) -> bool:
        return bool(self.empty_metrics)

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name).value for name in METRIC_NAMES}


def _mean(values: Sequence[float]) -> MetricValue:
    if not values:
        return MetricValue(0.0, 0)
    return MetricValue(math.fsum(values) / len(values), len(values))


def _qualifying(trace: SimulationTrace) -> list[VehicleRecord]:
    return [v for v in trace.vehicles if v.entry_time >= trace.warmup and v.exit_time <= trace.end]


def arterial_vehicles(trace: SimulationTrace) -> list[VehicleRecord]:
    return [v for v in _qualifying(trace) if v.full_corridor]


def arterial_travel_time(trace: SimulationTrace) -> MetricValue:
    return _mean([v.exit_time - v.entry_time for v in arterial_vehicles(trace)])


def freeway_travel_time(trace: SimulationTrace) -> MetricValue:
    return _mean([v.exit_time - v.entry_time for v in _qualifying(trace) if v.mainline_only])


def average_stops(trace: SimulationTrace) -> MetricValue:
    return _mean([float(v.stops) for v in arterial_vehicles(trace)])


def surrogate_emissions(trace: SimulationTrace, params: EmissionParams) -> MetricValue:
    """Grams per vehicle-km over full-corridor arterial vehicles."""
    vehicles = arterial_vehicles(trace)
    distance_km = math.fsum(v.distance for v in vehicles) / 1000.0
    if distance_km <= 0:
        return MetricValue(0.0, 0)
    grams = math.fsum(
        params.idle_rate * v.idle_time + params.cruise_rate * v.distance / 1000.0 + params.stop_penalty * v.stops
        for v in vehicles
    )
    return MetricValue(grams / distance_km, len(vehicles))


def average_queues(trace: SimulationTrace) -> tuple[MetricValue, MetricValue]:
    """(mean off-ramp queue, mean approach queue) in metres over the post-warm-up samples."""
    samples = sorted(
        (s for s in trace.queue_samples if trace.warmup < s.time <= trace.end),
        key=lambda s: s.time,
    )
    if not samples:
        return MetricValue(0.0, 0), MetricValue(0.0, 0)
    ramp_means = [math.fsum(s.offramp[r] for s in samples) / len(samples) for r in trace.offramp_ids]
    approach_means = [math.fsum(s.approach[key] for s in samples) / len(samples) for key in trace.approach_keys]
    offramp = (
        MetricValue(math.fsum(ramp_means) / len(ramp_means), len(samples)) if ramp_means else MetricValue(0.0, 0)
    )
    approach = (
        MetricValue(math.fsum(approach_means) / len(approach_means), len(samples))
        if approach_means
        else MetricValue(0.0, 0)
    )
    return offramp, approach


def not_applicable_metrics(trace: SimulationTrace) -> tuple[str, ...]:
    """Freeway metrics on a network without a freeway, off-ramp queues without off-ramps."""
    skipped = []
    if not trace.has_freeway:
        skipped.append("freeway_travel_time")
    if not trace.offramp_ids:
        skipped.append("offramp_queue")
    return tuple(skipped)


def build_report(
    trace: SimulationTrace, params: EmissionParams, scenario: str, strategy: str, seed: int
) -> MetricsReport:
    offramp, approach = average_queues(trace)
    report = MetricsReport(
        scenario=scenario,
        strategy=strategy,
        seed=seed,
        freeway_travel_time=freeway_travel_time(trace),
        arterial_travel_time=arterial_travel_time(trace),
        average_stops=average_stops(trace),
        emissions=surrogate_emissions(trace, params),
        offramp_queue=offramp,
        approach_queue=approach,
        not_applicable=not_applicable_metrics(trace),
    )
    if report.flagged:
        logger.warning(
            "Run %s/%s seed %d has no samples for %s", scenario, strategy, seed, ", ".join(report.empty_metrics)
        )
    return report


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float


def summarize(reports: Sequence[MetricsReport]) -> dict[str, MetricSummary]:
    """Mean and population standard deviation of each metric across replications."""
    summary = {}
    for name in METRIC_NAMES:
        values = np.array([getattr(r, name).value for r in reports], dtype=np.float64)
        if values.size == 0:
            summary[name] = MetricSummary(0.0, 0.0)
            continue
        summary[name] = MetricSummary(float(np.mean(values)), float(np.std(values)))
    return summary


def improvement(value: float, baseline: float) -> float | None:
    """Percent reduction relative to ``baseline``; None when the baseline is zero."""
    if baseline == 0:
        return None
    return (baseline - value) / baseline * 100.0
