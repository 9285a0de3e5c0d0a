"""Road-network data model and scenario files.

A scenario is one YAML document (``schema_version: 1``) describing the freeway
cells, ramps, signalized intersections, arterial links, demand profiles, the
incident specification and the control roster. Speeds are written in km/h
and held in memory in m/s. Intersections are numbered 1..K from the south end
of the corridor; link ``j`` joins intersection ``j`` to ``j + 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from greenwave.config import KMH_TO_MS

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DIRECTIONS = ("N", "S", "E", "W")
TURNS = ("L", "T", "R")
DEMAND_LEVELS = ("low", "moderate", "high")
INCIDENT_MODES = ("off", "fixed", "stochastic")
ARTERIAL_STRATEGIES = ("fac", "maxband", "qac", "qacu")
FREEWAY_ENTRANCE = "freeway"

DEFAULT_SATURATION_FLOW = 1800.0
DEFAULT_VEHICLE_SPACING = 7.5
DEFAULT_SQUARE_SIDE = 400.0
LINK_LENGTH_RANGE = (1000.0, 2500.0)
TURN_RATIO_TOLERANCE = 1e-9


class ScenarioParseError(ValueError):
    """The scenario file is not a well-formed scenario document."""


class ScenarioValidationError(ValueError):
    """The scenario parsed but violates one or more topology invariants."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        lines = "; ".join(f"{d.location}: {d.message}" for d in diagnostics)
        super().__init__(f"Scenario has {len(diagnostics)} problem(s): {lines}")


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    location: str
    message: str


@dataclass(frozen=True)
class FreewayCell:
    id: int
    length: float
    lanes: int
    free_flow_speed: float
    capacity: float
    jam_density: float
    onramp: int | None = None
    offramp: int | None = None

    @property
    def critical_density(self) -> float:
        """Critical density in veh/km/lane of the triangular diagram."""
        return self.capacity / (self.free_flow_speed * 3.6 * self.lanes)


@dataclass(frozen=True)
class Ramp:
    id: int
    kind: str
    storage_capacity: float
    connected_intersection: int
    connected_cell: int
    vehicle_spacing: float = DEFAULT_VEHICLE_SPACING
    split_ratio: float = 0.0
    leg: str = "E"


@dataclass(frozen=True)
class TurnRatios:
    left: float
    through: float
    right: float

    def as_dict(self) -> dict[str, float]:
        return {"L": self.left, "T": self.through, "R": self.right}


@dataclass(frozen=True)
class Approach:
    lanes: int = 1
    saturation_flow: float = DEFAULT_SATURATION_FLOW
    turn_ratios: TurnRatios = field(default_factory=lambda: TurnRatios(0.1, 0.8, 0.1))


@dataclass(frozen=True)
class Intersection:
    id: int
    approaches: dict[str, Approach]
    square_side: float = DEFAULT_SQUARE_SIDE


@dataclass(frozen=True)
class ArterialLink:
    id: int
    upstream_intersection: int
    downstream_intersection: int
    length: float
    lanes: int
    default_speed_limit: float


@dataclass(frozen=True)
class IncidentSpec:
    mode: str = "off"
    cell: int | None = None
    capacity_factor: float | None = None
    start: float = 600.0
    duration: float = 1200.0
    probability: float = 0.25


@dataclass(frozen=True)
class ControlRoster:
    freeway: str = "nfc"
    arterial: tuple[str, ...] = ARTERIAL_STRATEGIES


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    cells: tuple[FreewayCell, ...]
    ramps: tuple[Ramp, ...]
    intersections: tuple[Intersection, ...]
    links: tuple[ArterialLink, ...]
    demands: dict[str, tuple[float, ...]]
    demand_level: str = "moderate"
    incident: IncidentSpec = field(default_factory=IncidentSpec)
    control: ControlRoster = field(default_factory=ControlRoster)
    seed: int = 0
    duration: float = 2400.0
    warmup: float = 600.0
    allow_wide_links: bool = False
    schema_version: int = SCHEMA_VERSION

    @property
    def K(self) -> int:
        return len(self.intersections)

    def intersection(self, k: int) -> Intersection:
        for node in self.intersections:
            if node.id == k:
                return node
        raise KeyError(f"Unknown intersection {k}")

    def link_from(self, k: int) -> ArterialLink | None:
        """Link leaving intersection ``k`` northbound, if any."""
        for link in self.links:
            if link.upstream_intersection == k:
                return link
        return None

    def link_into(self, k: int) -> ArterialLink | None:
        """Link arriving at intersection ``k`` from the south, if any."""
        for link in self.links:
            if link.downstream_intersection == k:
                return link
        return None

    def ramp_at(self, k: int, kind: str) -> Ramp | None:
        for ramp in self.ramps:
            if ramp.kind == kind and ramp.connected_intersection == k:
                return ramp
        return None

    def entrances(self) -> list[str]:
        """Every entrance that may carry demand in this network."""
        names = [FREEWAY_ENTRANCE] if self.cells else []
        if not self.intersections:
            return names
        ids = sorted(node.id for node in self.intersections)
        names.append(entrance_name(ids[0], "S"))
        names.append(entrance_name(ids[-1], "N"))
        for k in ids:
            names.append(entrance_name(k, "W"))
            if self.ramp_at(k, "off") is None:
                names.append(entrance_name(k, "E"))
        return names


def entrance_name(intersection_id: int, leg: str) -> str:
    return f"I{intersection_id}:{leg}"


def parse_entrance(name: str) -> tuple[int, str]:
    """Split an arterial entrance name like ``I3:W`` into ``(3, "W")``."""
    head, _, leg = name.partition(":")
    if not head.startswith("I") or leg not in DIRECTIONS:
        raise ValueError(f"Not an arterial entrance: {name}")
    return int(head[1:]), leg


# --- Validation ---


def _check_cell(cell: FreewayCell, ramps: dict[int, Ramp]) -> list[Diagnostic]:
    loc = f"cells[{cell.id}]"
    out: list[Diagnostic] = []
    if cell.length <= 0:
        out.append(Diagnostic("invariant", loc, "length must be > 0"))
    if cell.lanes < 1:
        out.append(Diagnostic("invariant", loc, "lanes must be >= 1"))
    if cell.capacity <= 0:
        out.append(Diagnostic("invariant", loc, "capacity must be > 0"))
    if cell.free_flow_speed <= 0:
        out.append(Diagnostic("invariant", loc, "free_flow_speed must be > 0"))
    if cell.lanes >= 1 and cell.free_flow_speed > 0 and cell.jam_density <= cell.critical_density:
        out.append(
            Diagnostic(
                "invariant",
                loc,
                f"jam_density {cell.jam_density} must exceed critical density {cell.critical_density:.2f}",
            )
        )
    for kind, ramp_id in (("on", cell.onramp), ("off", cell.offramp)):
        if ramp_id is None:
            continue
        ramp = ramps.get(ramp_id)
        if ramp is None:
            out.append(Diagnostic("dangling-reference", loc, f"{kind}ramp {ramp_id} does not exist"))
        elif ramp.kind != kind or ramp.connected_cell != cell.id:
            out.append(Diagnostic("dangling-reference", loc, f"{kind}ramp {ramp_id} is not attached to this cell"))
    return out


def _check_ramp(ramp: Ramp, cells: dict[int, FreewayCell], intersections: set[int]) -> list[Diagnostic]:
    loc = f"ramps[{ramp.id}]"
    out: list[Diagnostic] = []
    if ramp.kind not in ("on", "off"):
        out.append(Diagnostic("invariant", loc, f"kind must be 'on' or 'off', got {ramp.kind!r}"))
    if ramp.storage_capacity <= 0:
        out.append(Diagnostic("invariant", loc, "storage_capacity must be > 0"))
    if ramp.vehicle_spacing <= 0:
        out.append(Diagnostic("invariant", loc, "vehicle_spacing must be > 0"))
    if not 0 <= ramp.split_ratio <= 1:
        out.append(Diagnostic("invariant", loc, "split_ratio must be within [0, 1]"))
    if ramp.leg != "E":
        out.append(Diagnostic("invariant", loc, "ramps connect to the East leg of their intersection"))
    if ramp.connected_intersection not in intersections:
        out.append(
            Diagnostic("dangling-reference", loc, f"intersection {ramp.connected_intersection} does not exist")
        )
    cell = cells.get(ramp.connected_cell)
    if cell is None:
        out.append(Diagnostic("dangling-reference", loc, f"cell {ramp.connected_cell} does not exist"))
    else:
        attached = cell.offramp if ramp.kind == "off" else cell.onramp
        if attached != ramp.id:
            out.append(Diagnostic("dangling-reference", loc, f"cell {cell.id} does not list this ramp"))
    return out


def _check_intersection(node: Intersection) -> list[Diagnostic]:
    loc = f"intersections[{node.id}]"
    out: list[Diagnostic] = []
    if node.square_side <= 0:
        out.append(Diagnostic("invariant", loc, "square_side must be > 0"))
    missing = [d for d in DIRECTIONS if d not in node.approaches]
    if missing:
        out.append(Diagnostic("invariant", loc, f"missing approaches {missing}"))
    for direction, approach in node.approaches.items():
        aloc = f"{loc}.{direction}"
        if direction not in DIRECTIONS:
            out.append(Diagnostic("invariant", aloc, "unknown approach direction"))
            continue
        if approach.lanes < 1:
            out.append(Diagnostic("invariant", aloc, "lanes must be >= 1"))
        if approach.saturation_flow <= 0:
            out.append(Diagnostic("invariant", aloc, "saturation_flow must be > 0"))
        ratios = approach.turn_ratios.as_dict().values()
        if any(r < 0 for r in ratios):
            out.append(Diagnostic("invariant", aloc, "turn ratios must be >= 0"))
        total = sum(ratios)
        if abs(total - 1.0) > TURN_RATIO_TOLERANCE:
            out.append(Diagnostic("invariant", aloc, f"turn ratios sum to {total:.6g}, expected 1"))
    return out


def _check_link(link: ArterialLink, intersections: set[int], allow_wide: bool) -> list[Diagnostic]:
    loc = f"links[{link.id}]"
    out: list[Diagnostic] = []
    for end in (link.upstream_intersection, link.downstream_intersection):
        if end not in intersections:
            out.append(Diagnostic("dangling-reference", loc, f"intersection {end} does not exist"))
    if link.downstream_intersection != link.upstream_intersection + 1:
        out.append(Diagnostic("invariant", loc, "links must join consecutive intersections j -> j+1"))
    if link.lanes < 1:
        out.append(Diagnostic("invariant", loc, "lanes must be >= 1"))
    if link.default_speed_limit <= 0:
        out.append(Diagnostic("invariant", loc, "speed limit must be > 0"))
    if link.length <= 0:
        out.append(Diagnostic("invariant", loc, "length must be > 0"))
    elif not allow_wide:
        low, high = LINK_LENGTH_RANGE
        if not low <= link.length <= high:
            out.append(
                Diagnostic(
                    "out-of-state-range",
                    loc,
                    f"length {link.length:g} m outside the link-length state range [{low:g}, {high:g}]",
                )
            )
    return out


def validate_topology(config: ScenarioConfig) -> list[Diagnostic]:
    """Return one diagnostic per violated invariant; an empty list means the scenario is valid."""
    diagnostics: list[Diagnostic] = []

    if config.schema_version != SCHEMA_VERSION:
        diagnostics.append(
            Diagnostic("invariant", "schema_version", f"unsupported {config.schema_version}, expected {SCHEMA_VERSION}")
        )

    cells = {cell.id: cell for cell in config.cells}
    ramps = {ramp.id: ramp for ramp in config.ramps}
    ids = [node.id for node in config.intersections]
    intersections = set(ids)

    if len(cells) != len(config.cells):
        diagnostics.append(Diagnostic("invariant", "cells", "duplicate cell ids"))
    if sorted(cells) != list(range(len(cells))):
        diagnostics.append(Diagnostic("invariant", "cells", "cell ids must be 0..n-1 in freeway order"))
    if len(ramps) != len(config.ramps):
        diagnostics.append(Diagnostic("invariant", "ramps", "duplicate ramp ids"))
    if sorted(ids) != list(range(1, len(ids) + 1)):
        diagnostics.append(Diagnostic("invariant", "intersections", "intersection ids must be 1..K"))

    for cell in config.cells:
        diagnostics.extend(_check_cell(cell, ramps))
    for ramp in config.ramps:
        diagnostics.extend(_check_ramp(ramp, cells, intersections))
    for kind in ("on", "off"):
        served = [r.connected_intersection for r in config.ramps if r.kind == kind]
        if len(served) != len(set(served)):
            diagnostics.append(Diagnostic("invariant", "ramps", f"more than one {kind}-ramp on one intersection"))
    for node in config.intersections:
        diagnostics.extend(_check_intersection(node))

    for link in config.links:
        diagnostics.extend(_check_link(link, intersections, config.allow_wide_links))
    chained = {link.upstream_intersection for link in config.links}
    for k in sorted(intersections)[:-1]:
        if k not in chained:
            diagnostics.append(Diagnostic("dangling-reference", "links", f"no link from intersection {k} to {k + 1}"))

    valid_entrances = set(config.entrances())
    for entrance, profile in config.demands.items():
        loc = f"demands[{entrance}]"
        if entrance not in valid_entrances:
            diagnostics.append(Diagnostic("dangling-reference", loc, "entrance does not exist in this network"))
        if len(profile) != 24:
            diagnostics.append(Diagnostic("invariant", loc, f"expected 24 hourly values, got {len(profile)}"))
        if any(rate < 0 for rate in profile):
            diagnostics.append(Diagnostic("negative-demand", loc, "demand must be >= 0"))

    if config.demand_level not in DEMAND_LEVELS:
        diagnostics.append(Diagnostic("invariant", "demand_level", f"must be one of {DEMAND_LEVELS}"))

    incident = config.incident
    if incident.mode not in INCIDENT_MODES:
        diagnostics.append(Diagnostic("invariant", "incident.mode", f"must be one of {INCIDENT_MODES}"))
    elif incident.mode != "off":
        if incident.cell not in cells:
            diagnostics.append(Diagnostic("dangling-reference", "incident.cell", f"cell {incident.cell} does not exist"))
        if incident.capacity_factor is not None and not 0 < incident.capacity_factor <= 1:
            diagnostics.append(Diagnostic("invariant", "incident.capacity_factor", "must be within (0, 1]"))
        if incident.duration <= 0:
            diagnostics.append(Diagnostic("invariant", "incident.duration", "must be > 0"))
        if not 0 <= incident.probability <= 1:
            diagnostics.append(Diagnostic("invariant", "incident.probability", "must be within [0, 1]"))

    if config.control.freeway != "nfc":
        diagnostics.append(Diagnostic("invariant", "control.freeway", "only 'nfc' freeway control is supported"))
    for strategy in config.control.arterial:
        if strategy not in ARTERIAL_STRATEGIES:
            diagnostics.append(Diagnostic("invariant", "control.arterial", f"unknown strategy {strategy!r}"))

    if config.duration <= 0:
        diagnostics.append(Diagnostic("invariant", "duration", "must be > 0"))
    if not 0 <= config.warmup < config.duration:
        diagnostics.append(Diagnostic("invariant", "warmup", "warm-up must be shorter than the duration"))

    return diagnostics


# --- (De)serialization ---


def _require(raw: dict, key: str, where: str) -> object:
    if key not in raw:
        raise ScenarioParseError(f"Missing key {where}.{key}")
    return raw[key]


def _as_mapping(value: object, where: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioParseError(f"Invalid {where}: expected mapping, got {type(value).__name__}")
    return value


def _as_list(value: object, where: str) -> list:
    if not isinstance(value, list):
        raise ScenarioParseError(f"Invalid {where}: expected list, got {type(value).__name__}")
    return value


def _number(raw: dict, key: str, where: str, default: float | None = None) -> float:
    value = raw.get(key, default) if default is not None else _require(raw, key, where)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ScenarioParseError(f"Invalid type for {where}.{key}: expected number, got {type(value).__name__}")
    return float(value)


def _integer(raw: dict, key: str, where: str, default: int | None = None) -> int:
    value = raw.get(key, default) if default is not None else _require(raw, key, where)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ScenarioParseError(f"Invalid type for {where}.{key}: expected int, got {type(value).__name__}")
    return value


def _optional_int(raw: dict, key: str, where: str) -> int | None:
    value = raw.get(key)
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool):
        raise ScenarioParseError(f"Invalid type for {where}.{key}: expected int or null")
    return value


def _parse_cell(raw: dict, where: str) -> FreewayCell:
    return FreewayCell(
        id=_integer(raw, "id", where),
        length=_number(raw, "length", where),
        lanes=_integer(raw, "lanes", where),
        free_flow_speed=_number(raw, "free_flow_speed_kmh", where, 105.0) * KMH_TO_MS,
        capacity=_number(raw, "capacity", where),
        jam_density=_number(raw, "jam_density", where, 150.0),
        onramp=_optional_int(raw, "onramp", where),
        offramp=_optional_int(raw, "offramp", where),
    )


def _parse_ramp(raw: dict, where: str) -> Ramp:
    kind = _require(raw, "kind", where)
    leg = raw.get("leg", "E")
    if not isinstance(kind, str) or not isinstance(leg, str):
        raise ScenarioParseError(f"Invalid type for {where}.kind/leg: expected str")
    return Ramp(
        id=_integer(raw, "id", where),
        kind=kind,
        storage_capacity=_number(raw, "storage_capacity", where),
        connected_intersection=_integer(raw, "connected_intersection", where),
        connected_cell=_integer(raw, "connected_cell", where),
        vehicle_spacing=_number(raw, "vehicle_spacing", where, DEFAULT_VEHICLE_SPACING),
        split_ratio=_number(raw, "split_ratio", where, 0.0),
        leg=leg,
    )


def _parse_approach(raw: dict, where: str) -> Approach:
    ratios = _as_mapping(_require(raw, "turn_ratios", where), f"{where}.turn_ratios")
    return Approach(
        lanes=_integer(raw, "lanes", where, 1),
        saturation_flow=_number(raw, "saturation_flow", where, DEFAULT_SATURATION_FLOW),
        turn_ratios=TurnRatios(
            left=_number(ratios, "left", f"{where}.turn_ratios"),
            through=_number(ratios, "through", f"{where}.turn_ratios"),
            right=_number(ratios, "right", f"{where}.turn_ratios"),
        ),
    )


def _parse_intersection(raw: dict, where: str) -> Intersection:
    approaches_raw = _as_mapping(_require(raw, "approaches", where), f"{where}.approaches")
    approaches = {
        str(direction): _parse_approach(_as_mapping(spec, f"{where}.{direction}"), f"{where}.{direction}")
        for direction, spec in approaches_raw.items()
    }
    return Intersection(
        id=_integer(raw, "id", where),
        approaches=approaches,
        square_side=_number(raw, "square_side", where, DEFAULT_SQUARE_SIDE),
    )


def _parse_link(raw: dict, where: str) -> ArterialLink:
    return ArterialLink(
        id=_integer(raw, "id", where),
        upstream_intersection=_integer(raw, "upstream_intersection", where),
        downstream_intersection=_integer(raw, "downstream_intersection", where),
        length=_number(raw, "length", where),
        lanes=_integer(raw, "lanes", where, 1),
        default_speed_limit=_number(raw, "speed_limit_kmh", where, 60.0) * KMH_TO_MS,
    )


def _parse_incident(raw: dict) -> IncidentSpec:
    mode = raw.get("mode", "off")
    if not isinstance(mode, str):
        raise ScenarioParseError("Invalid type for incident.mode: expected str")
    factor = raw.get("capacity_factor")
    if factor is not None and (not isinstance(factor, (int, float)) or isinstance(factor, bool)):
        raise ScenarioParseError("Invalid type for incident.capacity_factor: expected number or null")
    return IncidentSpec(
        mode=mode,
        cell=_optional_int(raw, "cell", "incident"),
        capacity_factor=None if factor is None else float(factor),
        start=_number(raw, "start", "incident", 600.0),
        duration=_number(raw, "duration", "incident", 1200.0),
        probability=_number(raw, "probability", "incident", 0.25),
    )


def scenario_from_dict(raw: object) -> ScenarioConfig:
    """Build a ScenarioConfig from a parsed document without validating invariants."""
    raw = _as_mapping(raw, "scenario")
    version = _integer(raw, "schema_version", "scenario")

    freeway = _as_mapping(raw.get("freeway") or {}, "freeway")
    arterial = _as_mapping(_require(raw, "arterial", "scenario"), "arterial")

    cells = tuple(
        _parse_cell(_as_mapping(c, f"freeway.cells[{i}]"), f"freeway.cells[{i}]")
        for i, c in enumerate(_as_list(freeway.get("cells") or [], "freeway.cells"))
    )
    ramps = tuple(
        _parse_ramp(_as_mapping(r, f"freeway.ramps[{i}]"), f"freeway.ramps[{i}]")
        for i, r in enumerate(_as_list(freeway.get("ramps") or [], "freeway.ramps"))
    )
    intersections = tuple(
        _parse_intersection(_as_mapping(n, f"arterial.intersections[{i}]"), f"arterial.intersections[{i}]")
        for i, n in enumerate(_as_list(_require(arterial, "intersections", "arterial"), "arterial.intersections"))
    )
    links = tuple(
        _parse_link(_as_mapping(lk, f"arterial.links[{i}]"), f"arterial.links[{i}]")
        for i, lk in enumerate(_as_list(arterial.get("links") or [], "arterial.links"))
    )

    demands: dict[str, tuple[float, ...]] = {}
    for entrance, profile in _as_mapping(raw.get("demands") or {}, "demands").items():
        values = _as_list(profile, f"demands[{entrance}]")
        if any(not isinstance(v, (int, float)) or isinstance(v, bool) for v in values):
            raise ScenarioParseError(f"Invalid type for demands[{entrance}]: expected list of numbers")
        demands[str(entrance)] = tuple(float(v) for v in values)

    control_raw = _as_mapping(raw.get("control") or {}, "control")
    arterial_roster = _as_list(control_raw.get("arterial", list(ARTERIAL_STRATEGIES)), "control.arterial")
    name = raw.get("name", "scenario")
    level = raw.get("demand_level", "moderate")
    allow_wide = raw.get("allow_wide_links", False)
    if not isinstance(name, str) or not isinstance(level, str) or not isinstance(allow_wide, bool):
        raise ScenarioParseError("Invalid type for name/demand_level/allow_wide_links")

    return ScenarioConfig(
        name=name,
        cells=cells,
        ramps=ramps,
        intersections=intersections,
        links=links,
        demands=demands,
        demand_level=level,
        incident=_parse_incident(_as_mapping(raw.get("incident") or {}, "incident")),
        control=ControlRoster(
            freeway=str(control_raw.get("freeway", "nfc")),
            arterial=tuple(str(s) for s in arterial_roster),
        ),
        seed=_integer(raw, "seed", "scenario", 0),
        duration=_number(raw, "duration", "scenario", 2400.0),
        warmup=_number(raw, "warmup", "scenario", 600.0),
        allow_wide_links=allow_wide,
        schema_version=version,
    )


def _kmh(speed: float) -> float:
    # Rounded so that load -> dump -> load reproduces the in-memory m/s value.
    return round(speed * 3.6, 9)


def scenario_to_dict(config: ScenarioConfig) -> dict:
    return {
        "schema_version": config.schema_version,
        "name": config.name,
        "seed": config.seed,
        "duration": config.duration,
        "warmup": config.warmup,
        "demand_level": config.demand_level,
        "allow_wide_links": config.allow_wide_links,
        "freeway": {
            "cells": [
                {
                    "id": c.id,
                    "length": c.length,
                    "lanes": c.lanes,
                    "free_flow_speed_kmh": _kmh(c.free_flow_speed),
                    "capacity": c.capacity,
                    "jam_density": c.jam_density,
                    "onramp": c.onramp,
                    "offramp": c.offramp,
                }
                for c in config.cells
            ],
            "ramps": [
                {
                    "id": r.id,
                    "kind": r.kind,
                    "storage_capacity": r.storage_capacity,
                    "connected_intersection": r.connected_intersection,
                    "connected_cell": r.connected_cell,
                    "vehicle_spacing": r.vehicle_spacing,
                    "split_ratio": r.split_ratio,
                    "leg": r.leg,
                }
                for r in config.ramps
            ],
        },
        "arterial": {
            "intersections": [
                {
                    "id": n.id,
                    "square_side": n.square_side,
                    "approaches": {
                        d: {
                            "lanes": a.lanes,
                            "saturation_flow": a.saturation_flow,
                            "turn_ratios": {
                                "left": a.turn_ratios.left,
                                "through": a.turn_ratios.through,
                                "right": a.turn_ratios.right,
                            },
                        }
                        for d, a in n.approaches.items()
                    },
                }
                for n in config.intersections
            ],
            "links": [
                {
                    "id": lk.id,
                    "upstream_intersection": lk.upstream_intersection,
                    "downstream_intersection": lk.downstream_intersection,
                    "length": lk.length,
                    "lanes": lk.lanes,
                    "speed_limit_kmh": _kmh(lk.default_speed_limit),
                }
                for lk in config.links
            ],
        },
        "demands": {entrance: list(profile) for entrance, profile in config.demands.items()},
        "incident": {
            "mode": config.incident.mode,
            "cell": config.incident.cell,
            "capacity_factor": config.incident.capacity_factor,
            "start": config.incident.start,
            "duration": config.incident.duration,
            "probability": config.incident.probability,
        },
        "control": {"freeway": config.control.freeway, "arterial": list(config.control.arterial)},
    }


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse and validate scenario text."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"Malformed scenario {source}: {exc}") from exc
    config = scenario_from_dict(raw)
    diagnostics = validate_topology(config)
    if diagnostics:
        logger.error("Scenario %s failed validation with %d diagnostic(s)", source, len(diagnostics))
        raise ScenarioValidationError(diagnostics)
    return config


def load_scenario(path: Path) -> ScenarioConfig:
    """Load a scenario file and check every topology invariant."""
    if not path.exists():
        raise FileNotFoundError(f"Scenario file not found: {path}")
    return parse_scenario(path.read_text(encoding="utf-8"), source=str(path))


def dump_scenario(config: ScenarioConfig) -> str:
    return yaml.safe_dump(scenario_to_dict(config), sort_keys=False, default_flow_style=None)
