"""Unified cycle control: every signal runs one shared (cycle, g1, g2) triple.

Each variable is settled on its own. A value proposed by a strict majority of
the signals wins; otherwise the action-space member nearest the mean is used.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Sequence
from statistics import fmean

from greenwave.signals import CYCLE_ACTIONS, G1_ACTIONS, G2_ACTIONS, TscAction

logger = logging.getLogger(__name__)

_TIE_TOLERANCE = 1e-9


def unify_variable(values: Sequence[float], space: Sequence[float]) -> float:
    """Strict-majority value, else the member of ``space`` closest to the mean (the larger on a tie)."""
    counts = Counter(values)
    value, count = max(counts.items(), key=lambda item: (item[1], item[0]))
    if count > len(values) / 2:
        return value
    mean = fmean(values)
    best = min(abs(member - mean) for member in space)
    return max(member for member in space if abs(member - mean) <= best + _TIE_TOLERANCE)


def unify(intended: Sequence[TscAction], enabled: bool) -> list[TscAction]:
    """Give every signal the same (cycle, g1, g2), chosen variable by variable."""
    if not intended:
        raise ValueError("unify needs at least one intended action")
    if not enabled:
        return list(intended)
    unified = TscAction(
        cycle=int(unify_variable([a.cycle for a in intended], CYCLE_ACTIONS)),
        g1=unify_variable([a.g1 for a in intended], G1_ACTIONS),
        g2=unify_variable([a.g2 for a in intended], G2_ACTIONS),
    )
    logger.debug("Unified %d intended actions into %s", len(intended), unified)
    return [unified] * len(intended)
