"""Mesoscopic corridor simulation.

The freeway is a cell transmission model over integer vehicles: each cell is a
FIFO, flows across a boundary come from the triangular fundamental diagram and
are rounded down with a fractional carry, and off-ramp diversions are part of
the diverging cell's outflow. The arterial is a point-queue model advanced
every second: vehicles travel a link at the link's speed, join the stop-line
FIFO of their approach and discharge at saturation flow while their movement
is green and the downstream link has storage left.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from greenwave.config import ControlParameters, SimulationConfig
from greenwave.signals import SignalController, SignalPlan, plan_from_ratios
from greenwave.topology import (
    DEFAULT_VEHICLE_SPACING,
    DIRECTIONS,
    FREEWAY_ENTRANCE,
    FreewayCell,
    Ramp,
    ScenarioConfig,
    parse_entrance,
)

logger = logging.getLogger(__name__)

TURN_DESTINATIONS: dict[str, dict[str, str]] = {
    "S": {"L": "W", "T": "N", "R": "E"},
    "N": {"L": "E", "T": "S", "R": "W"},
    "E": {"L": "S", "T": "W", "R": "N"},
    "W": {"L": "N", "T": "E", "R": "S"},
}
NORTHBOUND = "NB"
SOUTHBOUND = "SB"
MAX_ROUTE_STEPS = 64
_CARRY_CEILING = 1.0 - 1e-9


class SimulationConfigError(ValueError):
    """Invalid time step or a cell too short for the CTM step."""


class IncidentOverlapError(ValueError):
    """Two incidents on the same cell overlap in time."""


# --- Routes and vehicles ---


@dataclass(frozen=True)
class ArterialStep:
    intersection: int
    approach: str
    turn: str


@dataclass(frozen=True)
class FreewayStep:
    entry_cell: int
    exit_cell: int | None = None
    exit_ramp: int | None = None


RouteStep = ArterialStep | FreewayStep


@dataclass
class Vehicle:
    id: int
    origin: str
    route: tuple[RouteStep, ...]
    entry_time: float
    step: int = 0
    stops: int = 0
    idle_time: float = 0.0
    distance: float = 0.0
    exit_time: float | None = None
    timestamps: list[tuple[str, float]] = field(default_factory=list)
    arrival_time: float = 0.0
    approach_speed: float = 0.0
    link_entry: float | None = None

    @property
    def current(self) -> RouteStep | None:
        return self.route[self.step] if self.step < len(self.route) else None


@dataclass(frozen=True)
class VehicleRecord:
    id: int
    origin: str
    entry_time: float
    exit_time: float
    stops: int
    idle_time: float
    distance: float
    mainline_only: bool
    full_corridor: bool


@dataclass(frozen=True)
class QueueSample:
    time: float
    offramp: dict[int, float]
    approach: dict[tuple[int, str], float]


@dataclass(frozen=True)
class SimulationTrace:
    vehicles: tuple[VehicleRecord, ...]
    queue_samples: tuple[QueueSample, ...]
    offramp_ids: tuple[int, ...]
    approach_keys: tuple[tuple[int, str], ...]
    warmup: float
    end: float
    has_freeway: bool = True


# --- Network state ---


@dataclass
class OffRampState:
    ramp: Ramp
    queue: deque[Vehicle] = field(default_factory=deque)
    forced_blocked: bool = False

    @property
    def queue_length(self) -> float:
        return len(self.queue) * self.ramp.vehicle_spacing

    @property
    def blocked(self) -> bool:
        return self.forced_blocked or self.queue_length >= self.ramp.storage_capacity


@dataclass
class OnRampState:
    ramp: Ramp
    queue: deque[Vehicle] = field(default_factory=deque)
    carry: float = 0.0


@dataclass
class LinkState:
    """The stretch feeding one approach: travelling vehicles plus the stop-line FIFO."""

    intersection: int
    approach: str
    length: float
    lanes: int
    saturation_flow: float
    default_speed: float
    link_id: int | None = None
    direction: str | None = None
    spacing: float = DEFAULT_VEHICLE_SPACING
    recommended_speed: float | None = None
    offramp: OffRampState | None = None
    in_transit: list[tuple[float, int, Vehicle]] = field(default_factory=list)
    queue: deque[Vehicle] = field(default_factory=deque)
    credit: float = 1.0

    @property
    def storage_limited(self) -> bool:
        return self.link_id is not None

    @property
    def occupancy(self) -> int:
        return len(self.in_transit) + len(self.queue)

    def has_room(self) -> bool:
        if not self.storage_limited:
            return True
        return (self.occupancy + 1) * self.spacing <= self.length * self.lanes

    def travel_speed(self, max_speed: float) -> float:
        limit = self.recommended_speed if self.recommended_speed is not None else self.default_speed
        return min(limit, max_speed)

    @property
    def queue_length(self) -> float:
        if self.offramp is not None:
            return self.offramp.queue_length
        return len(self.queue) * self.spacing / self.lanes


@dataclass
class CellState:
    cell: FreewayCell
    vehicles: deque[Vehicle] = field(default_factory=deque)
    capacity_factor: float = 1.0
    carry: float = 0.0
    inflow_carry: float = 0.0
    outflow: int = 0

    @property
    def max_vehicles(self) -> int:
        return math.floor(self.cell.jam_density * self.cell.lanes * self.cell.length / 1000.0)

    @property
    def wave_speed(self) -> float:
        """Backward wave speed in m/s."""
        kmh = self.cell.capacity / (self.cell.lanes * (self.cell.jam_density - self.cell.critical_density))
        return kmh / 3.6

    def capacity_per_step(self, h: float) -> float:
        return self.cell.capacity * self.capacity_factor * h / 3600.0

    def sending(self, h: float) -> float:
        n = len(self.vehicles)
        return min(self.cell.free_flow_speed * h / self.cell.length * n, self.capacity_per_step(h))

    def receiving(self, h: float) -> float:
        jam = self.cell.jam_density * self.cell.lanes * self.cell.length / 1000.0
        free_space = max(jam - len(self.vehicles), 0.0)
        return min(self.capacity_per_step(h), self.wave_speed * h / self.cell.length * free_space)


@dataclass(frozen=True)
class IncidentState:
    cell: int
    capacity_factor: float
    start: float
    end: float

    def active(self, time: float) -> bool:
        return self.start <= time < self.end


def default_capacity_factor(cell: FreewayCell) -> float:
    """One lane closed."""
    return (cell.lanes - 1) / cell.lanes


# --- Window observations ---


@dataclass(frozen=True)
class IntersectionObservation:
    intersection: int
    offramp_queue: float
    demands: dict[str, float]
    approach_queues: dict[str, float]
    area_samples: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class LinkObservation:
    link_id: int
    samples: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class WindowObservation:
    start: float
    end: float
    intersections: dict[int, IntersectionObservation]
    links: dict[int, LinkObservation]


def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else 0.0


class World:
    """Mutable state of one simulation run."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        simulation: SimulationConfig | None = None,
        control: ControlParameters | None = None,
        seed: int | None = None,
        start_hour: int = 0,
        incidents: tuple[IncidentState, ...] | list[IncidentState] = (),
    ):
        self.scenario = scenario
        self.simulation = simulation or SimulationConfig()
        self.control = control or ControlParameters()
        self.seed = scenario.seed if seed is None else seed
        self.rng = np.random.default_rng(self.seed)
        self.start_hour = start_hour
        self.time = 0
        self._check_steps()

        self.cells = [CellState(cell) for cell in sorted(scenario.cells, key=lambda c: c.id)]
        self.entrance_buffer: deque[Vehicle] = deque()
        self.entrance_carry = 0.0
        self.offramps = {r.id: OffRampState(r) for r in scenario.ramps if r.kind == "off"}
        self.onramps = {r.id: OnRampState(r) for r in scenario.ramps if r.kind == "on"}
        self.approaches: dict[tuple[int, str], LinkState] = {}
        self._build_arterial()

        default_plan = plan_from_ratios(120, 0.5, 0.25, self.control.loss_time)
        self.controllers = {node.id: SignalController(default_plan) for node in scenario.intersections}

        self.incidents: list[IncidentState] = []
        for incident in incidents:
            self.schedule(incident)
        self._active_incidents: set[IncidentState] = set()

        self._next_id = 0
        self.entered = 0
        self.exited = 0
        self.completed: list[VehicleRecord] = []
        self.queue_samples: list[QueueSample] = []
        self.arrival_log: list[tuple[float, int, str]] = []
        self.area_log: list[tuple[float, int, float, float]] = []
        self.link_log: list[tuple[float, int, float, float]] = []
        self.events: list[dict] = []

    # --- Construction ---

    def _check_steps(self) -> None:
        sim = self.simulation
        if sim.arterial_dt <= 0 or sim.ctm_dt <= 0:
            raise SimulationConfigError("time steps must be > 0")
        if sim.ctm_dt % sim.arterial_dt != 0:
            raise SimulationConfigError("arterial_dt must divide ctm_dt")
        for cell in self.scenario.cells:
            if cell.free_flow_speed * sim.ctm_dt > cell.length + 1e-9:
                raise SimulationConfigError(
                    f"cell {cell.id} is {cell.length:g} m long; free flow covers "
                    f"{cell.free_flow_speed * sim.ctm_dt:.1f} m per {sim.ctm_dt} s step"
                )

    def _build_arterial(self) -> None:
        v_a = self.control.arterial_speed
        for node in self.scenario.intersections:
            for direction in DIRECTIONS:
                approach = node.approaches[direction]
                self.approaches[(node.id, direction)] = LinkState(
                    intersection=node.id,
                    approach=direction,
                    length=node.square_side / 2,
                    lanes=approach.lanes,
                    saturation_flow=approach.saturation_flow,
                    default_speed=v_a,
                )
        for link in self.scenario.links:
            for key, direction in (
                ((link.downstream_intersection, "S"), NORTHBOUND),
                ((link.upstream_intersection, "N"), SOUTHBOUND),
            ):
                state = self.approaches[key]
                state.length = link.length
                state.lanes = link.lanes
                state.default_speed = link.default_speed_limit
                state.link_id = link.id
                state.direction = direction
        for ramp_state in self.offramps.values():
            state = self.approaches[(ramp_state.ramp.connected_intersection, "E")]
            state.offramp = ramp_state
            state.queue = ramp_state.queue

    # --- Accessors ---

    def approach(self, intersection: int, direction: str) -> LinkState:
        return self.approaches[(intersection, direction)]

    def link_state(self, link_id: int, direction: str) -> LinkState:
        link = next(lk for lk in self.scenario.links if lk.id == link_id)
        if direction == NORTHBOUND:
            return self.approaches[(link.downstream_intersection, "S")]
        return self.approaches[(link.upstream_intersection, "N")]

    def plan(self, intersection: int) -> SignalPlan:
        return self.controllers[intersection].plan_at(self.time)

    def square_half(self, intersection: int) -> float:
        return self.scenario.intersection(intersection).square_side / 2

    def hourly_demands(self, time: float | None = None) -> dict[str, float]:
        t = self.time if time is None else time
        hour = (self.start_hour + int(t // 3600)) % 24
        return {entrance: profile[hour] for entrance, profile in sorted(self.scenario.demands.items())}

    def vehicle_counts(self) -> tuple[int, int, int]:
        """(entered, exited, currently in the network)."""
        inside = len(self.entrance_buffer)
        inside += sum(len(c.vehicles) for c in self.cells)
        inside += sum(len(r.queue) for r in self.offramps.values())
        inside += sum(len(r.queue) for r in self.onramps.values())
        inside += sum(
            len(s.in_transit) + (len(s.queue) if s.offramp is None else 0) for s in self.approaches.values()
        )
        return self.entered, self.exited, inside

    # --- Control inputs ---

    def apply_plans(self, plans: dict[int, SignalPlan]) -> None:
        for intersection, plan in plans.items():
            self.controllers[intersection].submit(plan, self.time)

    def set_recommended_speeds(self, speeds: dict[tuple[int, str], float]) -> None:
        for (link_id, direction), speed in speeds.items():
            self.link_state(link_id, direction).recommended_speed = speed

    def schedule(self, incident: IncidentState) -> None:
        if not any(c.cell.id == incident.cell for c in self.cells):
            raise SimulationConfigError(f"incident on unknown cell {incident.cell}")
        for other in self.incidents:
            # one active incident on the whole freeway at any time
            if incident.start < other.end and other.start < incident.end:
                logger.warning(
                    "Rejected incident on cell %d overlapping [%g, %g) on cell %d",
                    incident.cell,
                    other.start,
                    other.end,
                    other.cell,
                )
                raise IncidentOverlapError(
                    f"incident [{incident.start:g}, {incident.end:g}) on cell {incident.cell} overlaps"
                    f" [{other.start:g}, {other.end:g}) on cell {other.cell}"
                )
        self.incidents.append(incident)

    # --- Stepping ---

    def advance(self, dt: int | None = None) -> None:
        dt = self.simulation.arterial_dt if dt is None else dt
        if dt <= 0 or self.simulation.ctm_dt % dt != 0:
            raise SimulationConfigError(f"dt {dt} must be > 0 and divide the CTM step {self.simulation.ctm_dt}")
        t = self.time
        self._update_incidents(t)
        inject_demand(self, self.hourly_demands(t), dt)
        if t % self.simulation.ctm_dt == 0:
            self._ctm_step(t, self.simulation.ctm_dt)
        self._process_arrivals(t)
        self._discharge(t, dt)
        self._accrue_idle(dt)
        self.time = t + dt
        if self.time % self.simulation.measurement_interval == 0:
            self._sample_queues(self.time)

    def run_until(self, end: float, dt: int | None = None) -> None:
        while self.time < end:
            self.advance(dt)

    # --- Demand ---

    def spawn(self, origin: str, route: tuple[RouteStep, ...] | None = None) -> Vehicle:
        """Create a vehicle at an entrance; the route is sampled from turn and split ratios when not given."""
        t = self.time
        vehicle = Vehicle(
            id=self._next_id,
            origin=origin,
            route=route if route is not None else self.sample_route(origin),
            entry_time=t,
        )
        self._next_id += 1
        self.entered += 1
        vehicle.timestamps.append((origin, t))
        if origin == FREEWAY_ENTRANCE:
            self.entrance_buffer.append(vehicle)
            return vehicle
        k, leg = parse_entrance(origin)
        state = self.approaches[(k, leg)]
        speed = self.control.arterial_speed
        half = self.square_half(k)
        vehicle.distance += half
        vehicle.approach_speed = speed
        heapq.heappush(state.in_transit, (t + half / speed, vehicle.id, vehicle))
        return vehicle

    def _sample_offramp(self, first_cell: int) -> tuple[int | None, int | None]:
        for cell in self.cells[first_cell:]:
            if cell.cell.offramp is None:
                continue
            ramp = self.offramps[cell.cell.offramp].ramp
            if self.rng.random() < ramp.split_ratio:
                return cell.cell.id, ramp.id
        return None, None

    def _sample_turn(self, intersection: int, approach: str) -> str:
        ratios = self.scenario.intersection(intersection).approaches[approach].turn_ratios
        u = self.rng.random()
        if u < ratios.left:
            return "L"
        if u < ratios.left + ratios.through:
            return "T"
        return "R"

    def sample_route(self, origin: str) -> tuple[RouteStep, ...]:
        steps: list[RouteStep] = []
        used_freeway = False
        K = self.scenario.K
        if origin == FREEWAY_ENTRANCE:
            exit_cell, exit_ramp = self._sample_offramp(0)
            steps.append(FreewayStep(0, exit_cell, exit_ramp))
            if exit_ramp is None:
                return tuple(steps)
            used_freeway = True
            k, approach = self.offramps[exit_ramp].ramp.connected_intersection, "E"
        else:
            k, approach = parse_entrance(origin)

        while len(steps) < MAX_ROUTE_STEPS:
            turn = self._sample_turn(k, approach)
            steps.append(ArterialStep(k, approach, turn))
            out = TURN_DESTINATIONS[approach][turn]
            if out == "N" and k < K:
                k, approach = k + 1, "S"
                continue
            if out == "S" and k > 1:
                k, approach = k - 1, "N"
                continue
            onramp = self.scenario.ramp_at(k, "on") if out == "E" else None
            if onramp is not None and not used_freeway:
                used_freeway = True
                exit_cell, exit_ramp = self._sample_offramp(onramp.connected_cell + 1)
                steps.append(FreewayStep(onramp.connected_cell, exit_cell, exit_ramp))
                if exit_ramp is None:
                    break
                k, approach = self.offramps[exit_ramp].ramp.connected_intersection, "E"
                continue
            break
        return tuple(steps)

    # --- Freeway ---

    def _update_incidents(self, t: float) -> None:
        active = {inc for inc in self.incidents if inc.active(t)}
        if active == self._active_incidents:
            return
        for inc in sorted(active - self._active_incidents, key=lambda i: (i.start, i.cell)):
            logger.info("Incident on cell %d starts at t=%g", inc.cell, t)
            self.events.append({"event": "incident", "t": t, "cell": inc.cell, "state": "start"})
        for inc in sorted(self._active_incidents - active, key=lambda i: (i.start, i.cell)):
            logger.info("Incident on cell %d cleared at t=%g", inc.cell, t)
            self.events.append({"event": "incident", "t": t, "cell": inc.cell, "state": "end"})
        self._active_incidents = active
        for state in self.cells:
            factors = [inc.capacity_factor for inc in active if inc.cell == state.cell.id]
            state.capacity_factor = min(factors) if factors else 1.0

    def _ctm_step(self, t: float, h: float) -> None:
        if not self.cells:
            return
        send = [c.sending(h) for c in self.cells]
        recv = [c.receiving(h) for c in self.cells]
        n = len(self.cells)
        for i in reversed(range(n)):
            entered = self._cell_outflow(i, send[i], recv[i + 1] if i + 1 < n else math.inf, t)
            if i + 1 < n:
                self._merge_onramp(i + 1, max(recv[i + 1] - entered, 0.0), t)
        entered = self._enter_freeway(recv[0], t)
        self._merge_onramp(0, max(recv[0] - entered, 0.0), t)

    def _cell_outflow(self, i: int, sending: float, supply: float, t: float) -> int:
        """Move vehicles out of cell ``i``; returns how many entered the next cell."""
        state = self.cells[i]
        offramp = self.offramps.get(state.cell.offramp) if state.cell.offramp is not None else None
        allowance = sending
        if offramp is not None and offramp.blocked:
            allowance *= 1.0 - offramp.ramp.split_ratio

        budget = math.floor(allowance + state.carry)
        state.carry = min(allowance + state.carry - budget, _CARRY_CEILING)

        last = i + 1 >= len(self.cells)
        if last:
            main_budget = budget
        else:
            downstream = self.cells[i + 1]
            main_budget = math.floor(supply + downstream.inflow_carry)
            main_budget = min(main_budget, downstream.max_vehicles - len(downstream.vehicles))
            downstream.inflow_carry = min(max(supply + downstream.inflow_carry - main_budget, 0.0), _CARRY_CEILING)

        moved = 0
        main_moved = 0
        kept: deque[Vehicle] = deque()
        while state.vehicles:
            vehicle = state.vehicles.popleft()
            step = vehicle.current
            if moved < budget and isinstance(step, FreewayStep):
                if step.exit_cell == i and offramp is not None:
                    if not offramp.blocked:
                        self._enter_offramp(vehicle, offramp, t)
                        moved += 1
                        continue
                elif main_moved < main_budget:
                    if last:
                        self._finish(vehicle, t)
                    else:
                        self._enter_cell(vehicle, i + 1, t)
                    main_moved += 1
                    moved += 1
                    continue
            kept.append(vehicle)
        state.vehicles = kept
        state.outflow += moved
        return 0 if last else main_moved

    def _enter_cell(self, vehicle: Vehicle, i: int, t: float) -> None:
        state = self.cells[i]
        state.vehicles.append(vehicle)
        vehicle.distance += state.cell.length
        vehicle.timestamps.append((f"cell:{i}", t))

    def _enter_freeway(self, supply: float, t: float) -> int:
        first = self.cells[0]
        budget = math.floor(supply + self.entrance_carry)
        budget = min(budget, first.max_vehicles - len(first.vehicles))
        self.entrance_carry = min(max(supply + self.entrance_carry - budget, 0.0), _CARRY_CEILING)
        entered = 0
        while self.entrance_buffer and entered < budget:
            self._enter_cell(self.entrance_buffer.popleft(), 0, t)
            entered += 1
        return entered

    def _merge_onramp(self, i: int, spare: float, t: float) -> None:
        ramp_id = self.cells[i].cell.onramp
        if ramp_id is None:
            return
        onramp = self.onramps[ramp_id]
        state = self.cells[i]
        budget = math.floor(spare + onramp.carry)
        budget = min(budget, state.max_vehicles - len(state.vehicles))
        onramp.carry = min(max(spare + onramp.carry - budget, 0.0), _CARRY_CEILING)
        merged = 0
        while onramp.queue and merged < budget:
            self._enter_cell(onramp.queue.popleft(), i, t)
            merged += 1

    def _enter_offramp(self, vehicle: Vehicle, offramp: OffRampState, t: float) -> None:
        vehicle.step += 1
        vehicle.timestamps.append((f"ramp:{offramp.ramp.id}", t))
        vehicle.approach_speed = self.control.arterial_speed
        vehicle.link_entry = None
        state = self.approaches[(offramp.ramp.connected_intersection, "E")]
        self._join(state, vehicle, t, t)

    # --- Arterial ---

    def _is_green(self, state: LinkState, vehicle: Vehicle, t: float) -> bool:
        step = vehicle.current
        assert isinstance(step, ArterialStep)
        return self.controllers[state.intersection].is_green(state.intersection, (state.approach, step.turn), t)

    def _join(self, state: LinkState, vehicle: Vehicle, arrival: float, t: float) -> None:
        if state.queue or not self._is_green(state, vehicle, t):
            vehicle.stops += 1
        vehicle.arrival_time = arrival
        state.queue.append(vehicle)
        self.arrival_log.append((t, state.intersection, state.approach))

    def _process_arrivals(self, t: float) -> None:
        for state in self.approaches.values():
            while state.in_transit and state.in_transit[0][0] <= t:
                arrival, _, vehicle = heapq.heappop(state.in_transit)
                vehicle.timestamps.append((f"I{state.intersection}:{state.approach}", t))
                self._join(state, vehicle, arrival, t)

    def _destination(self, vehicle: Vehicle) -> LinkState | OnRampState | None:
        nxt = vehicle.route[vehicle.step + 1] if vehicle.step + 1 < len(vehicle.route) else None
        if isinstance(nxt, ArterialStep):
            return self.approaches[(nxt.intersection, nxt.approach)]
        if isinstance(nxt, FreewayStep):
            onramp = next(r for r in self.onramps.values() if r.ramp.connected_cell == nxt.entry_cell)
            return onramp
        return None

    def _discharge(self, t: float, dt: int) -> None:
        for state in self.approaches.values():
            rate = state.lanes * state.saturation_flow / 3600.0 * dt
            state.credit += rate
            while state.credit >= 1.0 and self._front_may_leave(state, t):
                vehicle = state.queue.popleft()
                state.credit -= 1.0
                self._depart(state, vehicle, t)
            state.credit = min(state.credit, max(1.0, rate))

    def _front_may_leave(self, state: LinkState, t: float) -> bool:
        """Single FIFO per approach: a held front vehicle holds everyone behind it."""
        if not state.queue:
            return False
        front = state.queue[0]
        if not self._is_green(state, front, t):
            return False
        destination = self._destination(front)
        return not (isinstance(destination, LinkState) and not destination.has_room())

    def _depart(self, state: LinkState, vehicle: Vehicle, t: float) -> None:
        k = state.intersection
        half = self.square_half(k)
        destination = self._destination(vehicle)
        v_out = self.control.arterial_speed
        if isinstance(destination, LinkState):
            v_out = destination.travel_speed(self.control.max_recommended_speed)

        t_in = vehicle.arrival_time - half / vehicle.approach_speed
        t_out = t + half / v_out
        self.area_log.append((t, k, t_in, t_out))
        if state.link_id is not None and vehicle.link_entry is not None:
            self.link_log.append((t, state.link_id, vehicle.link_entry, t))

        vehicle.step += 1
        if isinstance(destination, LinkState):
            vehicle.link_entry = t
            vehicle.approach_speed = v_out
            vehicle.distance += destination.length
            heapq.heappush(destination.in_transit, (t + destination.length / v_out, vehicle.id, vehicle))
        elif isinstance(destination, OnRampState):
            vehicle.link_entry = None
            vehicle.timestamps.append((f"ramp:{destination.ramp.id}", t))
            destination.queue.append(vehicle)
        else:
            vehicle.distance += half
            self._finish(vehicle, t_out)

    def _accrue_idle(self, dt: int) -> None:
        for state in self.approaches.values():
            for vehicle in state.queue:
                vehicle.idle_time += dt
        for onramp in self.onramps.values():
            for vehicle in onramp.queue:
                vehicle.idle_time += dt

    def _finish(self, vehicle: Vehicle, t: float) -> None:
        vehicle.exit_time = t
        vehicle.timestamps.append(("exit", t))
        self.exited += 1
        self.completed.append(
            VehicleRecord(
                id=vehicle.id,
                origin=vehicle.origin,
                entry_time=vehicle.entry_time,
                exit_time=t,
                stops=vehicle.stops,
                idle_time=vehicle.idle_time,
                distance=vehicle.distance,
                mainline_only=self._is_mainline_only(vehicle),
                full_corridor=self._is_full_corridor(vehicle),
            )
        )

    def _is_mainline_only(self, vehicle: Vehicle) -> bool:
        return vehicle.origin == FREEWAY_ENTRANCE and vehicle.route == (FreewayStep(0),)

    def _is_full_corridor(self, vehicle: Vehicle) -> bool:
        K = self.scenario.K
        if K == 0:
            return False
        northbound = tuple(ArterialStep(k, "S", "T") for k in range(1, K + 1))
        southbound = tuple(ArterialStep(k, "N", "T") for k in range(K, 0, -1))
        if vehicle.origin == "I1:S":
            return vehicle.route == northbound
        if vehicle.origin == f"I{K}:N":
            return vehicle.route == southbound
        return False

    # --- Measurement ---

    def _sample_queues(self, t: float) -> None:
        self.queue_samples.append(
            QueueSample(
                time=t,
                offramp={rid: r.queue_length for rid, r in sorted(self.offramps.items())},
                approach={key: s.queue_length for key, s in self.approaches.items()},
            )
        )

    def forget_before(self, time: float) -> None:
        """Drop per-event logs older than ``time``; queue samples and completed vehicles are kept."""
        self.arrival_log = [e for e in self.arrival_log if e[0] >= time]
        self.area_log = [e for e in self.area_log if e[0] >= time]
        self.link_log = [e for e in self.link_log if e[0] >= time]

    def trace(self, warmup: float | None = None) -> SimulationTrace:
        return SimulationTrace(
            vehicles=tuple(self.completed),
            queue_samples=tuple(self.queue_samples),
            offramp_ids=tuple(sorted(self.offramps)),
            approach_keys=tuple(self.approaches),
            warmup=self.scenario.warmup if warmup is None else warmup,
            end=self.time,
            has_freeway=bool(self.cells),
        )


# --- Module-level operations ---


def step(
    world: World,
    signal_plans: dict[int, SignalPlan] | None = None,
    recommended_speeds: dict[tuple[int, str], float] | None = None,
    dt: int | None = None,
) -> World:
    """Apply control inputs and advance the world by ``dt`` seconds."""
    if signal_plans:
        world.apply_plans(signal_plans)
    if recommended_speeds:
        world.set_recommended_speeds(recommended_speeds)
    world.advance(dt)
    return world


def inject_demand(world: World, demands: dict[str, float], dt: float) -> World:
    """Create Poisson arrivals at each entrance for a ``dt`` second interval (rates in veh/h)."""
    for entrance in sorted(demands):
        rate = demands[entrance]
        if rate <= 0:
            continue
        for _ in range(int(world.rng.poisson(rate * dt / 3600.0))):
            world.spawn(entrance)
    return world


def observe(world: World, start: float, end: float) -> WindowObservation:
    """Aggregate what the detectors saw in ``[start, end)``."""
    length = end - start
    samples = [s for s in world.queue_samples if start < s.time <= end]
    arrivals: dict[tuple[int, str], int] = {}
    for t, k, d in world.arrival_log:
        if start <= t < end:
            arrivals[(k, d)] = arrivals.get((k, d), 0) + 1

    in_window = [e for e in world.area_log if start <= e[0] < end]
    links_in_window = [e for e in world.link_log if start <= e[0] < end]
    intersections = {}
    for node in world.scenario.intersections:
        k = node.id
        offramp = world.scenario.ramp_at(k, "off")
        ramp_queue = _mean([s.offramp[offramp.id] for s in samples]) if offramp is not None else 0.0
        intersections[k] = IntersectionObservation(
            intersection=k,
            offramp_queue=ramp_queue,
            demands={d: arrivals.get((k, d), 0) * 3600.0 / length for d in DIRECTIONS},
            approach_queues={d: _mean([s.approach[(k, d)] for s in samples]) for d in DIRECTIONS},
            area_samples=tuple((t_in, t_out) for _, node_id, t_in, t_out in in_window if node_id == k),
        )
    links = {
        link.id: LinkObservation(
            link_id=link.id,
            samples=tuple((t_in, t_out) for _, lid, t_in, t_out in links_in_window if lid == link.id),
        )
        for link in world.scenario.links
    }
    return WindowObservation(start=start, end=end, intersections=intersections, links=links)


def schedule_incident(world: World, incident: IncidentState) -> World:
    world.schedule(incident)
    return world


def draw_incidents(
    rng: np.random.Generator,
    cell: FreewayCell,
    hours: int,
    probability: float,
    duration: float,
    capacity_factor: float | None = None,
) -> list[IncidentState]:
    """Independently start an incident at the top of each simulated hour with ``probability``."""
    factor = default_capacity_factor(cell) if capacity_factor is None else capacity_factor
    incidents = []
    for hour in range(hours):
        if rng.random() < probability:
            start = hour * 3600.0
            incidents.append(IncidentState(cell.id, factor, start, start + duration))
    return incidents
