from pathlib import Path

import numpy as np
import pytest
import yaml

from greenwave.scenarios import BUILTIN_SCENARIOS, load_builtin_scenario, resolve_scenario, scenario_text
from greenwave.topology import (
    ScenarioParseError,
    ScenarioValidationError,
    dump_scenario,
    entrance_name,
    load_scenario,
    parse_entrance,
    parse_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate_topology,
)


def _raw(name: str) -> dict:
    return yaml.safe_load(scenario_text(name))


class TestLoadScenario:
    def test_minimal_scenario(self, minimal_scenario):
        assert minimal_scenario.K == 1
        assert minimal_scenario.cells == ()
        assert validate_topology(minimal_scenario) == []

    def test_corridor_topology(self):
        config = load_builtin_scenario("corridor7")
        assert config.K == 7
        assert len(config.cells) == 6
        assert sum(1 for r in config.ramps if r.kind == "off") == 6
        assert sum(1 for r in config.ramps if r.kind == "on") == 5
        assert len(config.links) == 6

    @pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
    def test_builtins_are_valid(self, name):
        assert validate_topology(load_builtin_scenario(name)) == []

    def test_speeds_held_in_metres_per_second(self, micro_scenario):
        assert micro_scenario.links[0].default_speed_limit == pytest.approx(60 / 3.6)

    def test_turn_ratios_not_summing_to_one(self):
        raw = _raw("micro")
        raw["arterial"]["intersections"][0]["approaches"]["S"]["turn_ratios"] = {
            "left": 0.1,
            "through": 0.7,
            "right": 0.1,
        }
        with pytest.raises(ScenarioValidationError) as excinfo:
            parse_scenario(yaml.safe_dump(raw))
        assert any("turn ratios" in d.message for d in excinfo.value.diagnostics)

    def test_malformed_yaml(self):
        with pytest.raises(ScenarioParseError, match="Malformed"):
            parse_scenario("arterial: [unclosed")

    def test_missing_required_key(self):
        with pytest.raises(ScenarioParseError, match="arterial"):
            scenario_from_dict({"schema_version": 1})

    def test_wrong_type(self):
        raw = _raw("micro")
        raw["arterial"]["links"][0]["length"] = "long"
        with pytest.raises(ScenarioParseError, match="expected number"):
            scenario_from_dict(raw)

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(FileNotFoundError):
            load_scenario(tmp_path / "none.yaml")


class TestValidateTopology:
    def test_offramp_dangling_intersection(self):
        raw = _raw("desk")
        raw["freeway"]["ramps"][0]["connected_intersection"] = 9
        diagnostics = validate_topology(scenario_from_dict(raw))
        assert len(diagnostics) == 1
        assert diagnostics[0].kind == "dangling-reference"

    def test_link_too_short(self):
        raw = _raw("micro")
        raw["arterial"]["links"][0]["length"] = 900
        diagnostics = validate_topology(scenario_from_dict(raw))
        assert len(diagnostics) == 1
        assert diagnostics[0].kind == "out-of-state-range"

    def test_wide_links_allowed_when_opted_in(self):
        raw = _raw("micro")
        raw["arterial"]["links"][0]["length"] = 900
        raw["allow_wide_links"] = True
        assert validate_topology(scenario_from_dict(raw)) == []

    def test_negative_demand(self):
        raw = _raw("micro")
        raw["demands"]["I1:S"] = [-1] + [500] * 23
        kinds = [d.kind for d in validate_topology(scenario_from_dict(raw))]
        assert kinds == ["negative-demand"]

    def test_demand_on_unknown_entrance(self):
        raw = _raw("micro")
        raw["demands"]["I5:W"] = [100] * 24
        diagnostics = validate_topology(scenario_from_dict(raw))
        assert [d.location for d in diagnostics] == ["demands[I5:W]"]

    def test_missing_link_in_chain(self):
        raw = _raw("micro")
        raw["arterial"]["links"] = []
        diagnostics = validate_topology(scenario_from_dict(raw))
        assert any(d.location == "links" for d in diagnostics)

    def test_incident_cell_must_exist(self):
        raw = _raw("desk")
        raw["incident"]["cell"] = 7
        diagnostics = validate_topology(scenario_from_dict(raw))
        assert [d.location for d in diagnostics] == ["incident.cell"]

    def test_warmup_not_shorter_than_duration(self, minimal_raw):
        minimal_raw["warmup"] = 2400
        diagnostics = validate_topology(scenario_from_dict(minimal_raw))
        assert [d.location for d in diagnostics] == ["warmup"]


class TestRoundTrip:
    @pytest.mark.parametrize("name", BUILTIN_SCENARIOS)
    def test_dump_then_parse_is_identity(self, name):
        config = load_builtin_scenario(name)
        assert parse_scenario(dump_scenario(config)) == config

    @pytest.mark.parametrize("seed", range(5))
    def test_randomized_scenario_survives_yaml(self, seed):
        rng = np.random.default_rng(seed)
        raw = _raw("desk")
        raw["seed"] = int(rng.integers(0, 10_000))
        for link in raw["arterial"]["links"]:
            link["length"] = int(rng.integers(10, 21)) * 100
        for node in raw["arterial"]["intersections"]:
            for approach in node["approaches"].values():
                left, right = (round(float(v), 2) for v in rng.uniform(0.05, 0.3, size=2))
                approach["turn_ratios"] = {"left": left, "through": round(1 - left - right, 2), "right": right}
        for entrance, profile in raw["demands"].items():
            raw["demands"][entrance] = [int(v) for v in rng.integers(0, 3000, size=len(profile))]
        config = scenario_from_dict(raw)
        assert validate_topology(config) == []
        assert parse_scenario(dump_scenario(config)) == config

    def test_to_dict_reports_kmh(self, micro_scenario):
        assert scenario_to_dict(micro_scenario)["arterial"]["links"][0]["speed_limit_kmh"] == 60


class TestEntrances:
    def test_names(self):
        assert entrance_name(3, "W") == "I3:W"
        assert parse_entrance("I3:W") == (3, "W")

    def test_not_an_arterial_entrance(self):
        with pytest.raises(ValueError):
            parse_entrance("freeway")

    def test_offramp_leg_is_not_an_entrance(self, desk_scenario):
        entrances = desk_scenario.entrances()
        assert "freeway" in entrances
        assert "I2:E" not in entrances
        assert "I1:S" in entrances and "I3:N" in entrances


class TestResolveScenario:
    def test_builtin_name(self):
        assert resolve_scenario("micro").name == "micro"

    def test_file_path(self, tmp_path: Path, micro_scenario):
        path = tmp_path / "mine.yaml"
        path.write_text(dump_scenario(micro_scenario))
        assert resolve_scenario(str(path)) == micro_scenario

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            resolve_scenario("atlantis")
