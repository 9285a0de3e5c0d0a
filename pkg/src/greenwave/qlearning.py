"""Tabular Q-learning shared by the signal-timing and offset agents."""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transition:
    state: int
    action: int
    reward: float
    next_state: int
    next_actions: tuple[int, ...]

    def __post_init__(self) -> None:
        if not np.isfinite(self.reward) or not 0.0 <= self.reward <= 1.0:
            raise ValueError(f"reward must be within [0, 1], got {self.reward}")
        if not self.next_actions:
            raise ValueError("next_actions must not be empty")


@dataclass
class _Row:
    q: np.ndarray
    visits: dict[int, int] = field(default_factory=dict)
    deltas: dict[int, float] = field(default_factory=dict)


class QTable:
    """Sparse over states, dense over the agent's action ids.

    A state's row is filled with Uniform[0, 1) values from a generator seeded
    with ``(seed, state)``, so initial values do not depend on the order in
    which states are first seen. Only entries that have been updated need to
    be stored to reproduce the table.
    """

    def __init__(
        self,
        name: str,
        action_count: int,
        seed: int = 0,
        discount: float = 0.9,
        temperature: float = 0.5,
        threshold: float = 0.01,
        min_visits: int = 3,
    ):
        if action_count <= 0:
            raise ValueError("action_count must be > 0")
        if not 0.0 <= discount < 1.0:
            raise ValueError("discount must be within [0, 1)")
        if temperature <= 0:
            raise ValueError("temperature must be > 0")
        self.name = name
        self.action_count = action_count
        self.seed = seed
        self.discount = discount
        self.temperature = temperature
        self.threshold = threshold
        self.min_visits = min_visits
        self.rng = np.random.default_rng(seed)
        self._rows: dict[int, _Row] = {}

    def _initial(self, state: int) -> np.ndarray:
        return np.random.default_rng([self.seed, state]).random(self.action_count)

    def row(self, state: int) -> _Row:
        row = self._rows.get(state)
        if row is None:
            row = _Row(self._initial(state))
            self._rows[state] = row
        return row

    def peek(self, state: int) -> np.ndarray:
        """Q-values of ``state`` without materializing its row."""
        row = self._rows.get(state)
        return row.q if row is not None else self._initial(state)

    def q(self, state: int, action: int) -> float:
        return float(self.peek(state)[action])

    def set_q(self, state: int, action: int, value: float) -> None:
        self.row(state).q[action] = value

    def visits(self, state: int, action: int) -> int:
        row = self._rows.get(state)
        return row.visits.get(action, 0) if row is not None else 0

    def last_delta(self, state: int, action: int) -> float | None:
        row = self._rows.get(state)
        return row.deltas.get(action) if row is not None else None

    def entries(self) -> Iterator[tuple[int, int, float, int, float | None]]:
        """Every updated pair as (state, action, q, visits, last delta), in id order."""
        for state in sorted(self._rows):
            row = self._rows[state]
            for action in sorted(row.visits):
                yield state, action, float(row.q[action]), row.visits[action], row.deltas.get(action)

    def restore_entry(self, state: int, action: int, q: float, visits: int, delta: float | None) -> None:
        row = self.row(state)
        row.q[action] = q
        row.visits[action] = visits
        if delta is not None:
            row.deltas[action] = delta

    @property
    def state_count(self) -> int:
        return len(self._rows)

    def snapshot(self) -> dict:
        """Plain-data view used to compare tables."""
        return {
            "name": self.name,
            "action_count": self.action_count,
            "seed": self.seed,
            "discount": self.discount,
            "temperature": self.temperature,
            "threshold": self.threshold,
            "min_visits": self.min_visits,
            "rng": self.rng.bit_generator.state,
            "entries": list(self.entries()),
        }


def learning_rate(visits: int, discount: float) -> float:
    """Polynomial step size 1 / (1 + n(1 - γ))^0.6; n = 0 gives 1."""
    return float((1.0 / (1.0 + visits * (1.0 - discount))) ** 0.6)


def softmax_probabilities(q_values: np.ndarray, temperature: float) -> np.ndarray:
    scaled = np.asarray(q_values, dtype=np.float64) / temperature
    scaled -= scaled.max()
    weights = np.exp(scaled)
    return weights / weights.sum()


def softmax_select(table: QTable, state: int, actions: Sequence[int], rng: np.random.Generator | None = None) -> int:
    """Boltzmann exploration over ``actions``."""
    if len(actions) == 0:
        raise ValueError("actions must not be empty")
    rng = table.rng if rng is None else rng
    values = table.peek(state)[np.asarray(actions)]
    probabilities = softmax_probabilities(values, table.temperature)
    return int(actions[int(rng.choice(len(actions), p=probabilities))])


def greedy_select(table: QTable, state: int, actions: Sequence[int]) -> int:
    """Highest-valued action; ties go to the earliest in ``actions``."""
    if len(actions) == 0:
        raise ValueError("actions must not be empty")
    values = table.peek(state)[np.asarray(actions)]
    return int(actions[int(np.argmax(values))])


def update(table: QTable, transition: Transition) -> float:
    """Apply one Q-learning backup and return |ΔQ|."""
    row = table.row(transition.state)
    a = transition.action
    if not 0 <= a < table.action_count:
        raise ValueError(f"action {a} outside [0, {table.action_count})")
    next_values = table.peek(transition.next_state)[np.asarray(transition.next_actions)]
    target = transition.reward + table.discount * float(next_values.max())
    visits = row.visits.get(a, 0)
    eta = learning_rate(visits, table.discount)
    old = float(row.q[a])
    new = old + eta * (target - old)
    row.q[a] = new
    row.visits[a] = visits + 1
    delta = abs(new - old)
    row.deltas[a] = delta
    return delta


def converged(table: QTable) -> bool:
    """True when every pair visited at least ``min_visits`` times last moved less than the threshold."""
    counted = [
        delta
        for _, _, _, visits, delta in table.entries()
        if visits >= table.min_visits and delta is not None
    ]
    if not counted:
        return False
    return all(delta < table.threshold for delta in counted)
