"""Signal plans for the six-phase scheme.

Phases 1-3 serve the north-south axis and phases 4-6 the east-west axis:
1 is the southern approach's left turn, 2 the north/south throughs and
rights, 3 the northern approach's left turn, and 4-6 mirror this for
east/west. Each phase is followed by an equal slice of the loss time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

CYCLE_ACTIONS: tuple[int, ...] = tuple(range(40, 181, 10))
G1_ACTIONS: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
G2_ACTIONS: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)
OFFSET_STEP = 5
PHASE_COUNT = 6
DEFAULT_LOSS_TIME = 12

PHASE_MOVEMENTS: dict[int, frozenset[tuple[str, str]]] = {
    1: frozenset({("S", "L")}),
    2: frozenset({("N", "T"), ("N", "R"), ("S", "T"), ("S", "R")}),
    3: frozenset({("N", "L")}),
    4: frozenset({("E", "L")}),
    5: frozenset({("E", "T"), ("E", "R"), ("W", "T"), ("W", "R")}),
    6: frozenset({("W", "L")}),
}
MOVEMENT_PHASE: dict[tuple[str, str], int] = {
    movement: phase for phase, movements in PHASE_MOVEMENTS.items() for movement in movements
}
THROUGH_PHASE_NS = 2


class InfeasiblePlanError(ValueError):
    """Loss time leaves no green time in the cycle."""


class InvalidActionError(ValueError):
    """An action or offset outside its action space."""


class InvalidQueryError(ValueError):
    """A green query for an unknown movement or a negative time."""


@dataclass(frozen=True)
class TscAction:
    cycle: int
    g1: float
    g2: float

    def __post_init__(self) -> None:
        if self.cycle not in CYCLE_ACTIONS:
            raise InvalidActionError(f"cycle {self.cycle} not in {CYCLE_ACTIONS}")
        if self.g1 not in G1_ACTIONS:
            raise InvalidActionError(f"g1 {self.g1} not in {G1_ACTIONS}")
        if self.g2 not in G2_ACTIONS:
            raise InvalidActionError(f"g2 {self.g2} not in {G2_ACTIONS}")


@dataclass(frozen=True)
class PhaseQuery:
    intersection: int
    movement: tuple[str, str]
    time: float


@dataclass(frozen=True)
class SignalPlan:
    cycle: float
    loss_time: float
    greens: tuple[float, ...]
    absolute_offset: float = 0.0
    phase_order: tuple[int, ...] = (1, 2, 3, 4, 5, 6)

    def __post_init__(self) -> None:
        if len(self.greens) != PHASE_COUNT:
            raise InfeasiblePlanError(f"expected {PHASE_COUNT} greens, got {len(self.greens)}")
        if any(g < 0 for g in self.greens):
            raise InfeasiblePlanError("green times must be >= 0")
        g = self.greens
        if abs(g[0] - g[2]) > 1e-9 or abs(g[3] - g[5]) > 1e-9:
            raise InfeasiblePlanError("phases of the same colour must share a green time")
        if abs(sum(g) - (self.cycle - self.loss_time)) > 1e-9:
            raise InfeasiblePlanError(f"greens sum to {sum(g)}, expected {self.cycle - self.loss_time}")
        if not 0 <= self.absolute_offset < self.cycle:
            raise InfeasiblePlanError(f"offset {self.absolute_offset} outside [0, {self.cycle})")

    @property
    def loss_slice(self) -> float:
        return self.loss_time / PHASE_COUNT

    @cached_property
    def phase_windows(self) -> tuple[tuple[float, float], ...]:
        """Green window (start, end) of each phase, relative to the cycle start."""
        windows = []
        start = 0.0
        for green in self.greens:
            windows.append((start, start + green))
            start += green + self.loss_slice
        return tuple(windows)

    def active_phase(self, time: float) -> int | None:
        """Phase holding green at ``time``, or None during loss time."""
        tau = (time - self.absolute_offset) % self.cycle
        for phase, (start, end) in zip(self.phase_order, self.phase_windows):
            if start <= tau < end:
                return phase
        return None


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def exact_greens(cycle: float, g1: float, g2: float, loss_time: float) -> tuple[float, ...]:
    """Green times of phases 1-6 from the split ratios, before rounding."""
    effective = cycle - loss_time
    side = effective * g1 * g2
    through = effective * g1 * (1 - 2 * g2)
    cross_side = effective * (1 - g1) * g2
    cross_through = effective * (1 - g1) * (1 - 2 * g2)
    return (side, through, side, cross_side, cross_through, cross_side)


def plan_from_ratios(cycle: float, g1: float, g2: float, loss_time: float, offset: float = 0.0) -> SignalPlan:
    """Integer-second plan for arbitrary ratios; the rounding residue goes to the larger through phase."""
    if loss_time >= cycle:
        raise InfeasiblePlanError(f"loss time {loss_time} leaves no green in a {cycle} s cycle")
    exact = exact_greens(cycle, g1, g2, loss_time)
    rounded = [_round_half_up(g) for g in exact]
    residue = round(cycle - loss_time - sum(rounded), 9)
    # Phases 2 and 5 have no colour partner, so adjusting one keeps the pairs equal.
    repair = 1 if rounded[1] >= rounded[4] else 4
    rounded[repair] += residue
    return SignalPlan(
        cycle=cycle,
        loss_time=loss_time,
        greens=tuple(float(g) for g in rounded),
        absolute_offset=offset,
    )


def compute_splits(action: TscAction, loss_time: float = DEFAULT_LOSS_TIME) -> SignalPlan:
    if loss_time >= action.cycle:
        raise InfeasiblePlanError(f"loss time {loss_time} leaves no green in a {action.cycle} s cycle")
    return plan_from_ratios(action.cycle, action.g1, action.g2, loss_time)


def offset_actions(upstream_cycle: float) -> tuple[int, ...]:
    """Admissible relative offsets {0, 5, ..., T_c' - 5}."""
    return tuple(range(0, int(upstream_cycle), OFFSET_STEP))


def apply_offset(plan: SignalPlan, relative_offset: float, upstream_plan: SignalPlan) -> SignalPlan:
    """Start ``plan``'s cycle ``relative_offset`` seconds after the upstream signal's."""
    if relative_offset not in offset_actions(upstream_plan.cycle):
        raise InvalidActionError(
            f"offset {relative_offset} outside {{0, 5, ..., {int(upstream_plan.cycle) - OFFSET_STEP}}}"
        )
    absolute = (upstream_plan.absolute_offset + relative_offset) % plan.cycle
    return replace(plan, absolute_offset=absolute)


def movement_is_green(plan: SignalPlan, query: PhaseQuery) -> bool:
    if query.time < 0:
        raise InvalidQueryError(f"time must be >= 0, got {query.time}")
    phase = MOVEMENT_PHASE.get(query.movement)
    if phase is None:
        raise InvalidQueryError(f"unknown movement {query.movement}")
    return plan.active_phase(query.time) == phase


def next_cycle_boundary(plan: SignalPlan, time: float) -> float:
    """First cycle start of ``plan`` at or after ``time``."""
    k = math.ceil((time - plan.absolute_offset) / plan.cycle - 1e-12)
    return plan.absolute_offset + k * plan.cycle


class SignalController:
    """Holds one intersection's running plan; new plans wait for the running plan's next cycle start."""

    def __init__(self, plan: SignalPlan):
        self.plan = plan
        self.pending: SignalPlan | None = None
        self.switch_at: float | None = None

    def submit(self, plan: SignalPlan, time: float) -> None:
        if plan == self.plan and self.pending is None:
            return
        self.pending = plan
        self.switch_at = next_cycle_boundary(self.plan, time)

    def plan_at(self, time: float) -> SignalPlan:
        if self.pending is not None and self.switch_at is not None and time >= self.switch_at:
            self.plan = self.pending
            self.pending = None
            self.switch_at = None
        return self.plan

    def is_green(self, intersection: int, movement: tuple[str, str], time: float) -> bool:
        return movement_is_green(self.plan_at(time), PhaseQuery(intersection, movement, time))


def plan_to_dict(plan: SignalPlan) -> dict:
    return {
        "cycle": plan.cycle,
        "loss_time": plan.loss_time,
        "greens": list(plan.greens),
        "absolute_offset": plan.absolute_offset,
    }
