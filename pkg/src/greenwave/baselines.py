"""Comparison strategies: fixed-time control and bandwidth-maximizing offsets."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from greenwave.config import KMH_TO_MS, BaselineConfig
from greenwave.signals import THROUGH_PHASE_NS, SignalPlan, plan_from_ratios
from greenwave.topology import ScenarioConfig

logger = logging.getLogger(__name__)

_EPS = 1e-9
G1_LIMITS = (0.2, 0.8)
# offset grids up to this many points are searched exhaustively
_EXHAUSTIVE_GRID = 5000


class CycleMismatchError(ValueError):
    """Bandwidth needs every signal on the same cycle."""


@dataclass(frozen=True)
class BandGeometry:
    windows: tuple[tuple[float, float], ...]
    travel_times: tuple[float, ...]
    inbound: float
    outbound: float


def fixed_time_plan(config: BaselineConfig, loss_time: float) -> SignalPlan:
    return plan_from_ratios(config.fac_cycle, config.fac_g1, config.fac_g2, loss_time)


def webster_g1(scenario: ScenarioConfig, intersection: int, demands: dict[str, float]) -> float:
    """North-south share of green from the critical flow ratios of both axes, limited to [0.2, 0.8]."""
    node = scenario.intersection(intersection)

    def flow_ratio(direction: str) -> float:
        approach = node.approaches[direction]
        return demands.get(direction, 0.0) / (approach.saturation_flow * approach.lanes)

    ns = max(flow_ratio("N"), flow_ratio("S"))
    ew = max(flow_ratio("E"), flow_ratio("W"))
    if ns + ew <= 0:
        return 0.5
    # snapped to the 0.1 grid the coordinators choose from
    return round(min(max(ns / (ns + ew), G1_LIMITS[0]), G1_LIMITS[1]) * 10) / 10


def approach_demands(scenario: ScenarioConfig, hour: int) -> dict[int, dict[str, float]]:
    """Rough per-approach flows at ``hour`` from the entrance profiles, used to size MAXBAND splits."""
    K = scenario.K
    rates = {entrance: profile[hour % 24] for entrance, profile in scenario.demands.items()}
    through_nb = rates.get("I1:S", 0.0)
    through_sb = rates.get(f"I{K}:N", 0.0)
    result = {}
    for k in range(1, K + 1):
        east = rates.get(f"I{k}:E", 0.0)
        offramp = scenario.ramp_at(k, "off")
        if offramp is not None:
            east = rates.get("freeway", 0.0) * offramp.split_ratio
        result[k] = {"S": through_nb, "N": through_sb, "E": east, "W": rates.get(f"I{k}:W", 0.0)}
    return result


# --- Bandwidth ---


def through_window(plan: SignalPlan) -> tuple[float, float]:
    """North-south through green as (start, length), relative to the plan's own cycle start."""
    start, end = plan.phase_windows[THROUGH_PHASE_NS - 1]
    return start, end - start


def _arc(start: float, length: float, cycle: float) -> list[tuple[float, float]]:
    if length >= cycle - _EPS:
        return [(0.0, cycle)]
    a = start % cycle
    b = a + length
    if b <= cycle + _EPS:
        return [(a, min(b, cycle))]
    return [(a, cycle), (0.0, b - cycle)]


def _intersect(left: list[tuple[float, float]], right: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out = []
    for a1, b1 in left:
        for a2, b2 in right:
            lo, hi = max(a1, a2), min(b1, b2)
            if hi - lo > _EPS:
                out.append((lo, hi))
    return sorted(out)


def _longest(intervals: list[tuple[float, float]], cycle: float) -> float:
    if not intervals:
        return 0.0
    longest = max(b - a for a, b in intervals)
    # An interval ending at the cycle boundary continues into one starting at 0.
    head = [b for a, b in intervals if a <= _EPS]
    tail = [a for a, b in intervals if b >= cycle - _EPS]
    if head and tail and not (len(intervals) == 1 and intervals[0] == (0.0, cycle)):
        longest = max(longest, (cycle - min(tail)) + max(head))
    return min(longest, cycle)


def _band(
    offsets: Sequence[float], windows: Sequence[tuple[float, float]], arrivals: Sequence[float], cycle: float
) -> float:
    feasible = [(0.0, cycle)]
    for offset, (start, length), arrival in zip(offsets, windows, arrivals):
        feasible = _intersect(feasible, _arc(offset + start - arrival, length, cycle))
        if not feasible:
            return 0.0
    return _longest(feasible, cycle)


def _common_cycle(plans: Sequence[SignalPlan]) -> float:
    cycles = {plan.cycle for plan in plans}
    if len(cycles) != 1:
        raise CycleMismatchError(f"all plans must share one cycle, got {sorted(cycles)}")
    return cycles.pop()


def cumulative_travel_times(link_lengths: Sequence[float], speed: float) -> tuple[float, ...]:
    times = [0.0]
    for length in link_lengths:
        times.append(times[-1] + length / speed)
    return tuple(times)


def band_geometry(
    offsets: Sequence[float], plans: Sequence[SignalPlan], link_lengths: Sequence[float], progression_speed: float
) -> BandGeometry:
    """Bands for a chain of signals from south (first) to north (last); speed in m/s."""
    if len(link_lengths) != len(plans) - 1:
        raise ValueError("need one link length between each pair of consecutive signals")
    cycle = _common_cycle(plans)
    windows = tuple(through_window(plan) for plan in plans)
    times = cumulative_travel_times(link_lengths, progression_speed)
    outbound = _band(offsets, windows, times, cycle)
    from_north = [times[-1] - t for t in times]
    inbound = _band(offsets, windows, from_north, cycle)
    return BandGeometry(windows=windows, travel_times=times, inbound=inbound, outbound=outbound)


def bandwidth(
    offsets: Sequence[float], plans: Sequence[SignalPlan], link_lengths: Sequence[float], progression_speed: float
) -> tuple[float, float]:
    """(inbound, outbound) band widths in seconds; outbound runs south to north."""
    geometry = band_geometry(offsets, plans, link_lengths, progression_speed)
    return geometry.inbound, geometry.outbound


# --- Offset search ---


def _total(offsets, plans, link_lengths, speed) -> float:
    inbound, outbound = bandwidth(offsets, plans, link_lengths, speed)
    return inbound + outbound


def _ascend(
    start: list[int], plans: Sequence[SignalPlan], link_lengths: Sequence[float], speed: float, cycle: int
) -> tuple[list[int], float]:
    """Single-offset and suffix-shift moves on a 1 s grid until no move improves the total band."""
    current = list(start)
    best = _total(current, plans, link_lengths, speed)
    improved = True
    while improved:
        improved = False
        for k in range(1, len(current)):
            for value in range(cycle):
                candidate = current[:k] + [value] + current[k + 1 :]
                score = _total(candidate, plans, link_lengths, speed)
                if score > best + _EPS:
                    current, best, improved = candidate, score, True
            for shift in range(1, cycle):
                candidate = current[:k] + [(o + shift) % cycle for o in current[k:]]
                score = _total(candidate, plans, link_lengths, speed)
                if score > best + _EPS:
                    current, best, improved = candidate, score, True
    return current, best


def _grid_search(
    plans: Sequence[SignalPlan], link_lengths: Sequence[float], speed: float, cycle: int
) -> list[int]:
    best_offsets, best_score = [0] * len(plans), -1.0
    for tail in itertools.product(range(cycle), repeat=len(plans) - 1):
        offsets = [0, *tail]
        score = _total(offsets, plans, link_lengths, speed)
        if score > best_score + _EPS:
            best_offsets, best_score = offsets, score
    logger.info("MAXBAND offsets %s with total band %.1f s (full grid)", best_offsets, best_score)
    return best_offsets


def maxband_offsets(
    plans: Sequence[SignalPlan],
    link_lengths: Sequence[float],
    progression_speed: float,
    starts: int = 8,
    seed: int = 0,
) -> list[int]:
    """Absolute offsets (first signal at 0) maximizing inbound plus outbound band."""
    cycle = int(_common_cycle(plans))
    n = len(plans)
    if n == 1:
        return [0]
    if cycle ** (n - 1) <= _EXHAUSTIVE_GRID:
        return _grid_search(plans, link_lengths, progression_speed, cycle)
    times = cumulative_travel_times(link_lengths, progression_speed)
    candidates = [
        [0] * n,
        [round(t) % cycle for t in times],
        [round(-t) % cycle for t in times],
    ]
    rng = np.random.default_rng(seed)
    while len(candidates) < starts:
        candidates.append([0] + [int(v) for v in rng.integers(0, cycle, size=n - 1)])

    best_offsets, best_score = None, -1.0
    for start in candidates:
        offsets, score = _ascend(start, plans, link_lengths, progression_speed, cycle)
        if score > best_score + _EPS:
            best_offsets, best_score = offsets, score
    logger.info("MAXBAND offsets %s with total band %.1f s", best_offsets, best_score)
    return best_offsets


def maxband_plans(
    scenario: ScenarioConfig, hour: int, config: BaselineConfig, loss_time: float, seed: int = 0
) -> list[SignalPlan]:
    """Webster-style splits on a common cycle, offset for the widest two-way band."""
    demands = approach_demands(scenario, hour)
    plans = [
        plan_from_ratios(config.fac_cycle, webster_g1(scenario, k, demands[k]), config.fac_g2, loss_time)
        for k in range(1, scenario.K + 1)
    ]
    lengths = [scenario.link_from(k).length for k in range(1, scenario.K)]
    offsets = maxband_offsets(
        plans, lengths, config.progression_speed_kmh * KMH_TO_MS, starts=config.maxband_starts, seed=seed
    )
    return [replace(plan, absolute_offset=float(offset)) for plan, offset in zip(plans, offsets)]
