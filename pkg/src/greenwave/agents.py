"""Signal-timing (TSC) and offset/speed (DSO) agents: state bins, action ids and rewards.

TSC state id (mixed radix, least significant first)::

    w_s + 11 * (d_S + 41 * (d_E + 41 * (d_N + 41 * d_W)))

DSO state id::

    c_U + 15 * (c_D + 15 * (q_U + 6 * (q_D + 6 * L)))

where every letter is a bin index. TSC action id is ``c * 28 + g1 * 4 + g2``;
DSO action id is ``(T_o / 5) * 81 + v_D * 9 + v_U``, so an offset keeps its id
whatever the upstream cycle.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from greenwave.config import KMH_TO_MS, ControlParameters
from greenwave.signals import CYCLE_ACTIONS, G1_ACTIONS, G2_ACTIONS, OFFSET_STEP, TscAction, offset_actions

logger = logging.getLogger(__name__)

OFFRAMP_QUEUE_BINS: tuple[float, ...] = tuple(range(0, 501, 50))
DEMAND_BINS: tuple[float, ...] = tuple(range(0, 4001, 100))
CYCLE_BINS: tuple[float, ...] = CYCLE_ACTIONS
APPROACH_QUEUE_BINS: tuple[float, ...] = tuple(range(0, 251, 50))
LINK_LENGTH_BINS: tuple[float, ...] = tuple(range(1000, 2501, 100))
SPEED_ACTIONS_KMH: tuple[int, ...] = tuple(range(40, 81, 5))

TSC_ACTION_COUNT = len(CYCLE_ACTIONS) * len(G1_ACTIONS) * len(G2_ACTIONS)
MAX_OFFSET_SLOTS = max(CYCLE_ACTIONS) // OFFSET_STEP
DSO_ACTION_COUNT = MAX_OFFSET_SLOTS * len(SPEED_ACTIONS_KMH) ** 2
TSC_STATE_COUNT = len(OFFRAMP_QUEUE_BINS) * len(DEMAND_BINS) ** 4
DSO_STATE_COUNT = len(CYCLE_BINS) ** 2 * len(APPROACH_QUEUE_BINS) ** 2 * len(LINK_LENGTH_BINS)
ALL_TSC_ACTIONS: tuple[int, ...] = tuple(range(TSC_ACTION_COUNT))


class NoTraversalError(ValueError):
    """No vehicle completed the area or link in the window."""


def bin_index(value: float, bins: Sequence[float]) -> int:
    """Index of the nearest bin of an evenly spaced grid; ties go up, out-of-range values clamp."""
    step = bins[1] - bins[0]
    index = math.floor((value - bins[0]) / step + 0.5)
    return min(max(index, 0), len(bins) - 1)


def nearest_bin(value: float, bins: Sequence[float]) -> float:
    return bins[bin_index(value, bins)]


# --- TSC ---


@dataclass(frozen=True)
class TscObservation:
    offramp_queue: float
    demand_s: float
    demand_e: float
    demand_n: float
    demand_w: float


def discretize_tsc(raw: TscObservation) -> tuple[TscObservation, int]:
    w = bin_index(raw.offramp_queue, OFFRAMP_QUEUE_BINS)
    ds, de, dn, dw = (bin_index(d, DEMAND_BINS) for d in (raw.demand_s, raw.demand_e, raw.demand_n, raw.demand_w))
    radix_w, radix_d = len(OFFRAMP_QUEUE_BINS), len(DEMAND_BINS)
    state = w + radix_w * (ds + radix_d * (de + radix_d * (dn + radix_d * dw)))
    binned = TscObservation(
        offramp_queue=OFFRAMP_QUEUE_BINS[w],
        demand_s=DEMAND_BINS[ds],
        demand_e=DEMAND_BINS[de],
        demand_n=DEMAND_BINS[dn],
        demand_w=DEMAND_BINS[dw],
    )
    return binned, state


def tsc_action_id(action: TscAction) -> int:
    return (
        CYCLE_ACTIONS.index(action.cycle) * len(G1_ACTIONS) * len(G2_ACTIONS)
        + G1_ACTIONS.index(action.g1) * len(G2_ACTIONS)
        + G2_ACTIONS.index(action.g2)
    )


def tsc_action(action_id: int) -> TscAction:
    if not 0 <= action_id < TSC_ACTION_COUNT:
        raise ValueError(f"TSC action id {action_id} outside [0, {TSC_ACTION_COUNT})")
    c, rest = divmod(action_id, len(G1_ACTIONS) * len(G2_ACTIONS))
    g1, g2 = divmod(rest, len(G2_ACTIONS))
    return TscAction(CYCLE_ACTIONS[c], G1_ACTIONS[g1], G2_ACTIONS[g2])


def tsc_reward(offramp_queue: float, travel_time: float, params: ControlParameters) -> float:
    if travel_time <= 0:
        raise NoTraversalError(f"area travel time must be > 0, got {travel_time}")
    queue_term = max(0.0, 1.0 - offramp_queue / params.offramp_queue_reference)
    speed_term = params.square_side / (travel_time * params.arterial_speed)
    return float(np.clip(queue_term * speed_term, 0.0, 1.0))


# --- DSO ---


@dataclass(frozen=True)
class DsoObservation:
    upstream_cycle: float
    downstream_cycle: float
    upstream_queue: float
    downstream_queue: float
    link_length: float


@dataclass(frozen=True)
class DsoAction:
    offset: int
    downstream_speed_kmh: int
    upstream_speed_kmh: int

    @property
    def downstream_speed(self) -> float:
        return self.downstream_speed_kmh * KMH_TO_MS

    @property
    def upstream_speed(self) -> float:
        return self.upstream_speed_kmh * KMH_TO_MS


def discretize_dso(raw: DsoObservation) -> tuple[DsoObservation, int]:
    cu = bin_index(raw.upstream_cycle, CYCLE_BINS)
    cd = bin_index(raw.downstream_cycle, CYCLE_BINS)
    qu = bin_index(raw.upstream_queue, APPROACH_QUEUE_BINS)
    qd = bin_index(raw.downstream_queue, APPROACH_QUEUE_BINS)
    length = bin_index(raw.link_length, LINK_LENGTH_BINS)
    nc, nq = len(CYCLE_BINS), len(APPROACH_QUEUE_BINS)
    state = cu + nc * (cd + nc * (qu + nq * (qd + nq * length)))
    binned = DsoObservation(
        upstream_cycle=CYCLE_BINS[cu],
        downstream_cycle=CYCLE_BINS[cd],
        upstream_queue=APPROACH_QUEUE_BINS[qu],
        downstream_queue=APPROACH_QUEUE_BINS[qd],
        link_length=LINK_LENGTH_BINS[length],
    )
    return binned, state


def dso_action_id(action: DsoAction) -> int:
    speeds = len(SPEED_ACTIONS_KMH)
    return (
        (action.offset // OFFSET_STEP) * speeds * speeds
        + SPEED_ACTIONS_KMH.index(action.downstream_speed_kmh) * speeds
        + SPEED_ACTIONS_KMH.index(action.upstream_speed_kmh)
    )


def dso_action(action_id: int) -> DsoAction:
    if not 0 <= action_id < DSO_ACTION_COUNT:
        raise ValueError(f"DSO action id {action_id} outside [0, {DSO_ACTION_COUNT})")
    speeds = len(SPEED_ACTIONS_KMH)
    slot, rest = divmod(action_id, speeds * speeds)
    down, up = divmod(rest, speeds)
    return DsoAction(slot * OFFSET_STEP, SPEED_ACTIONS_KMH[down], SPEED_ACTIONS_KMH[up])


def admissible_dso_actions(upstream_cycle: int) -> tuple[int, ...]:
    if upstream_cycle not in CYCLE_ACTIONS:
        raise ValueError(f"upstream cycle {upstream_cycle} not in {CYCLE_ACTIONS}")
    return tuple(
        dso_action_id(DsoAction(offset, down, up))
        for offset in offset_actions(upstream_cycle)
        for down in SPEED_ACTIONS_KMH
        for up in SPEED_ACTIONS_KMH
    )


def dso_reward(
    upstream_queue: float,
    downstream_queue: float,
    travel_time: float,
    link_length: float,
    params: ControlParameters,
) -> float:
    if travel_time <= 0:
        raise NoTraversalError(f"link travel time must be > 0, got {travel_time}")
    reference = params.approach_queue_reference
    queue_term = max(0.0, 1.0 - upstream_queue / reference) * max(0.0, 1.0 - downstream_queue / reference)
    speed_term = 3.0 * link_length / (4.0 * travel_time * params.arterial_speed)
    return float(np.clip(queue_term * speed_term, 0.0, 1.0))


def area_travel_time(samples: Sequence[tuple[float, float]]) -> float:
    """Mean of ``t_out - t_in`` over the window; raises NoTraversalError when nobody got through."""
    if len(samples) == 0:
        raise NoTraversalError("no vehicle traversed in the window")
    durations = np.array([t_out - t_in for t_in, t_out in samples], dtype=np.float64)
    if (durations < 0).any():
        raise ValueError("every sample needs t_out >= t_in")
    return float(durations.mean())


def travel_time_or_window(samples: Sequence[tuple[float, float]], window: float) -> float:
    try:
        return area_travel_time(samples)
    except NoTraversalError:
        logger.warning("No traversals in a %g s window; using the window length", window)
        return window
