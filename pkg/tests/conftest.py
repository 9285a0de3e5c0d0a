import copy
from pathlib import Path

import pytest

from greenwave.config import GeneralConfig, GreenwaveConfig
from greenwave.scenarios import load_builtin_scenario
from greenwave.topology import ScenarioConfig, scenario_from_dict

_APPROACH = {"lanes": 1, "saturation_flow": 1800, "turn_ratios": {"left": 0.1, "through": 0.8, "right": 0.1}}

MINIMAL_SCENARIO = {
    "schema_version": 1,
    "name": "minimal",
    "seed": 1,
    "duration": 2400,
    "warmup": 600,
    "arterial": {
        "intersections": [{"id": 1, "approaches": {d: dict(_APPROACH) for d in "NSEW"}}],
        "links": [],
    },
    "demands": {},
    "incident": {"mode": "off"},
}


def flat(rate: float) -> list[float]:
    return [rate] * 24


@pytest.fixture
def tmp_data_dir(tmp_path: Path) -> Path:
    """Temporary data directory for tests."""
    data_dir = tmp_path / "greenwave-data"
    data_dir.mkdir()
    return data_dir


@pytest.fixture
def tmp_config_dir(tmp_path: Path) -> Path:
    """Temporary config directory for tests."""
    config_dir = tmp_path / "greenwave-config"
    config_dir.mkdir()
    return config_dir


@pytest.fixture
def default_config(tmp_data_dir: Path) -> GreenwaveConfig:
    return GreenwaveConfig(general=GeneralConfig(data_dir=tmp_data_dir))


@pytest.fixture
def minimal_raw() -> dict:
    """A 1-intersection scenario document with no freeway, as parsed YAML."""
    return copy.deepcopy(MINIMAL_SCENARIO)


@pytest.fixture
def minimal_scenario(minimal_raw: dict) -> ScenarioConfig:
    return scenario_from_dict(minimal_raw)


@pytest.fixture
def micro_scenario() -> ScenarioConfig:
    return load_builtin_scenario("micro")


@pytest.fixture
def desk_scenario() -> ScenarioConfig:
    return load_builtin_scenario("desk")


@pytest.fixture
def overload_scenario() -> ScenarioConfig:
    return load_builtin_scenario("overload")
