import numpy as np
import pytest

from greenwave.agents import (
    APPROACH_QUEUE_BINS,
    DEMAND_BINS,
    LINK_LENGTH_BINS,
    OFFRAMP_QUEUE_BINS,
    TSC_ACTION_COUNT,
    DsoAction,
    DsoObservation,
    NoTraversalError,
    TscObservation,
    admissible_dso_actions,
    area_travel_time,
    bin_index,
    discretize_dso,
    discretize_tsc,
    dso_action,
    dso_action_id,
    dso_reward,
    nearest_bin,
    travel_time_or_window,
    tsc_action,
    tsc_action_id,
    tsc_reward,
)
from greenwave.config import ControlParameters
from greenwave.signals import TscAction


@pytest.fixture
def params() -> ControlParameters:
    return ControlParameters()


class TestBins:
    def test_zero_observation(self):
        binned, _ = discretize_tsc(TscObservation(0, 0, 0, 0, 0))
        assert binned == TscObservation(0, 0, 0, 0, 0)

    @pytest.mark.parametrize("value,expected", [(130, 150), (124, 100), (125, 150), (600, 500), (-5, 0)])
    def test_offramp_queue(self, value, expected):
        assert nearest_bin(value, OFFRAMP_QUEUE_BINS) == expected

    def test_demand_clamps(self):
        assert nearest_bin(5000, DEMAND_BINS) == 4000

    def test_approach_queue_clamps(self):
        assert nearest_bin(260, APPROACH_QUEUE_BINS) == 250

    def test_link_length(self):
        assert nearest_bin(1540, LINK_LENGTH_BINS) == 1500
        assert nearest_bin(900, LINK_LENGTH_BINS) == 1000

    def test_tsc_state_ids_distinct(self):
        _, a = discretize_tsc(TscObservation(50, 100, 0, 0, 0))
        _, b = discretize_tsc(TscObservation(0, 0, 0, 0, 100))
        _, c = discretize_tsc(TscObservation(0, 0, 0, 0, 0))
        assert len({a, b, c}) == 3
        assert c == 0

    def test_dso_cycle_is_identity(self):
        binned, _ = discretize_dso(DsoObservation(70, 120, 0, 0, 1200))
        assert binned.upstream_cycle == 70
        assert binned.downstream_cycle == 120

    def test_dso_state_depends_on_length(self):
        _, short = discretize_dso(DsoObservation(60, 60, 0, 0, 1000))
        _, long = discretize_dso(DsoObservation(60, 60, 0, 0, 2000))
        assert short != long


class TestActions:
    def test_tsc_action_count(self):
        assert TSC_ACTION_COUNT == 15 * 7 * 4

    def test_tsc_action_id_round_trip(self):
        action = TscAction(120, 0.4, 0.3)
        assert tsc_action(tsc_action_id(action)) == action

    def test_tsc_action_id_out_of_range(self):
        with pytest.raises(ValueError):
            tsc_action(TSC_ACTION_COUNT)

    def test_admissible_counts(self):
        assert len(admissible_dso_actions(40)) == 648
        assert len(admissible_dso_actions(180)) == 2916

    def test_offset_id_stable_across_cycles(self):
        action_id = dso_action_id(DsoAction(35, 40, 40))
        assert action_id == 7 * 81
        assert action_id in admissible_dso_actions(40)
        assert action_id in admissible_dso_actions(180)
        assert dso_action(action_id) == DsoAction(35, 40, 40)

    def test_offset_beyond_cycle_not_admissible(self):
        assert dso_action_id(DsoAction(40, 40, 40)) not in admissible_dso_actions(40)

    def test_unknown_upstream_cycle(self):
        with pytest.raises(ValueError):
            admissible_dso_actions(45)

    def test_speed_conversion(self):
        action = DsoAction(0, 80, 40)
        assert action.downstream_speed == pytest.approx(80 / 3.6)
        assert action.upstream_speed == pytest.approx(40 / 3.6)


class TestTscReward:
    def test_no_queue_free_flow(self, params):
        assert tsc_reward(0, 24, params) == pytest.approx(1.0)

    def test_full_queue(self, params):
        assert tsc_reward(400, 24, params) == 0
        assert tsc_reward(450, 10, params) == 0

    def test_half_queue_half_speed(self, params):
        assert tsc_reward(200, 48, params) == pytest.approx(0.25)

    def test_clipped_to_one(self, params):
        assert tsc_reward(0, 5, params) == 1.0

    def test_no_traversal(self, params):
        with pytest.raises(NoTraversalError):
            tsc_reward(0, 0, params)


class TestDsoReward:
    def test_maximum_speed(self, params):
        length = 1200
        assert dso_reward(0, 0, length / (80 / 3.6), length, params) == pytest.approx(1.0)

    def test_queue_at_reference(self, params):
        assert dso_reward(200, 0, 60, 1200, params) == 0
        assert dso_reward(0, 250, 60, 1200, params) == 0

    def test_speed_limit_travel(self, params):
        length = 1500
        assert dso_reward(0, 0, length / params.arterial_speed, length, params) == pytest.approx(0.75)

    def test_no_traversal(self, params):
        with pytest.raises(NoTraversalError):
            dso_reward(0, 0, 0, 1200, params)


class TestTravelTime:
    def test_single_vehicle(self):
        assert area_travel_time([(100.0, 124.0)]) == 24

    def test_mean(self):
        assert area_travel_time([(0.0, 20.0), (5.0, 45.0)]) == 30

    def test_empty(self):
        with pytest.raises(NoTraversalError):
            area_travel_time([])

    def test_fallback_to_window(self):
        assert travel_time_or_window([], 300) == 300
        assert travel_time_or_window([(0.0, 30.0)], 300) == 30


class TestRandomInputs:
    @pytest.mark.parametrize("bins", [OFFRAMP_QUEUE_BINS, DEMAND_BINS, APPROACH_QUEUE_BINS, LINK_LENGTH_BINS])
    def test_binning_is_idempotent(self, bins):
        rng = np.random.default_rng(0)
        for value in rng.uniform(-2 * bins[-1], 2 * bins[-1], size=500):
            index = bin_index(float(value), bins)
            assert 0 <= index < len(bins)
            assert bin_index(bins[index], bins) == index
            assert nearest_bin(nearest_bin(float(value), bins), bins) == bins[index]

    def test_tsc_reward_bounded_and_monotone(self, params):
        rng = np.random.default_rng(1)
        for _ in range(500):
            queue, more_queue = np.sort(rng.uniform(0, 600, size=2))
            travel, slower = np.sort(rng.uniform(1, 300, size=2))
            reward = tsc_reward(queue, travel, params)
            assert 0.0 <= reward <= 1.0
            assert tsc_reward(more_queue, travel, params) <= reward
            assert tsc_reward(queue, slower, params) <= reward

    def test_dso_reward_bounded_and_monotone(self, params):
        rng = np.random.default_rng(2)
        for _ in range(500):
            up, more_up = np.sort(rng.uniform(0, 400, size=2))
            down = float(rng.uniform(0, 400))
            travel, slower = np.sort(rng.uniform(1, 300, size=2))
            length = float(rng.uniform(500, 2500))
            reward = dso_reward(up, down, travel, length, params)
            assert 0.0 <= reward <= 1.0
            assert dso_reward(more_up, down, travel, length, params) <= reward
            assert dso_reward(up, down, slower, length, params) <= reward
