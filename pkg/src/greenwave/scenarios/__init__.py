from __future__ import annotations

import importlib.resources
from pathlib import Path

from greenwave.topology import ScenarioConfig, load_scenario, parse_scenario

BUILTIN_SCENARIOS = ("micro", "desk", "corridor7", "overload")


def scenario_text(name: str) -> str:
    """Read a shipped scenario file from the scenarios package via importlib.resources."""
    if name not in BUILTIN_SCENARIOS:
        raise KeyError(f"Unknown built-in scenario {name!r}; choose from {', '.join(BUILTIN_SCENARIOS)}")
    return importlib.resources.files("greenwave.scenarios").joinpath(f"{name}.yaml").read_text(encoding="utf-8")


def load_builtin_scenario(name: str) -> ScenarioConfig:
    return parse_scenario(scenario_text(name), source=f"builtin:{name}")


def resolve_scenario(value: str) -> ScenarioConfig:
    """Load ``value`` as a scenario file path, or as a built-in scenario name when no such file exists."""
    path = Path(value).expanduser()
    if path.suffix in (".yaml", ".yml") or path.exists():
        return load_scenario(path)
    return load_builtin_scenario(value)
