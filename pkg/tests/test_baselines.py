import pytest

from greenwave.baselines import (
    CycleMismatchError,
    band_geometry,
    bandwidth,
    cumulative_travel_times,
    fixed_time_plan,
    maxband_offsets,
    maxband_plans,
    through_window,
    webster_g1,
)
from greenwave.config import BaselineConfig
from greenwave.signals import SignalPlan, plan_from_ratios


def _plan(cycle: float = 100, through: float = 30) -> SignalPlan:
    side = 5.0
    cross = (cycle - 10 - 2 * side - through) / 3
    return SignalPlan(cycle=cycle, loss_time=10, greens=(side, through, side, cross, cross, cross))


class TestFixedTime:
    def test_default_plan(self):
        plan = fixed_time_plan(BaselineConfig(), loss_time=12)
        assert plan.cycle == 120
        assert sum(plan.greens) == 108
        assert plan.absolute_offset == 0


class TestWebster:
    def test_no_demand_splits_evenly(self, micro_scenario):
        assert webster_g1(micro_scenario, 1, {}) == 0.5

    def test_clamped(self, micro_scenario):
        assert webster_g1(micro_scenario, 1, {"S": 3000, "E": 1}) == 0.8
        assert webster_g1(micro_scenario, 1, {"S": 1, "E": 3000}) == 0.2

    def test_snapped_to_action_grid(self, micro_scenario):
        # 2 lanes x 1800 veh/h on S, 1 lane x 1800 veh/h on E
        g1 = webster_g1(micro_scenario, 1, {"S": 1080, "E": 720})
        assert g1 == 0.4  # 0.3 / (0.3 + 0.4) = 0.43
        for s in range(0, 3000, 97):
            g1 = webster_g1(micro_scenario, 1, {"S": s, "E": 700})
            assert 0.2 <= g1 <= 0.8
            assert g1 == round(g1, 1)


class TestBandwidth:
    def test_single_signal(self):
        plan = _plan()
        assert through_window(plan)[1] == 30
        assert bandwidth([0], [plan], [], 10.0) == (pytest.approx(30), pytest.approx(30))

    def test_perfect_progression(self):
        plans = [_plan(), _plan()]
        inbound, outbound = bandwidth([0, 50], plans, [500], 10.0)
        assert outbound == pytest.approx(30)
        assert inbound == pytest.approx(30)

    def test_shifted_window(self):
        plans = [_plan(), _plan()]
        _, outbound = bandwidth([0, 60], plans, [500], 10.0)
        assert outbound == pytest.approx(20)

    def test_cycle_mismatch(self):
        with pytest.raises(CycleMismatchError):
            bandwidth([0, 0], [_plan(100), _plan(120)], [500], 10.0)

    def test_link_count_mismatch(self):
        with pytest.raises(ValueError):
            bandwidth([0, 0], [_plan(), _plan()], [], 10.0)

    def test_geometry_exposes_windows_and_times(self):
        plans = [_plan(), _plan()]
        geometry = band_geometry([0, 50], plans, [500], 10.0)
        assert geometry.travel_times == (0.0, 50.0)
        assert geometry.windows == (through_window(plans[0]), through_window(plans[1]))
        assert (geometry.inbound, geometry.outbound) == bandwidth([0, 50], plans, [500], 10.0)

    def test_cumulative_travel_times(self):
        assert cumulative_travel_times([100, 300], 10.0) == (0.0, 10.0, 40.0)


class TestMaxband:
    def test_single_signal(self):
        assert maxband_offsets([_plan()], [], 10.0) == [0]

    def test_two_signals_match_exhaustive_search(self):
        plans = [plan_from_ratios(60, 0.5, 0.1, 12), plan_from_ratios(60, 0.5, 0.1, 12)]
        lengths = [600]
        speed = 10.0

        def total(offsets):
            return sum(bandwidth(offsets, plans, lengths, speed))

        # only the relative offset matters, so the first signal is pinned at 0
        oracle = max(total([0, b]) for b in range(60))
        offsets = maxband_offsets(plans, lengths, speed, starts=8, seed=0)
        assert offsets[0] == 0
        assert total(offsets) == pytest.approx(oracle)

    def test_three_signals_match_exhaustive_search(self):
        plans = [plan_from_ratios(40, 0.5, 0.1, 8), plan_from_ratios(40, 0.6, 0.1, 8), plan_from_ratios(40, 0.4, 0.1, 8)]
        lengths = [600, 900]
        speed = 12.0

        def total(offsets):
            return sum(bandwidth(offsets, plans, lengths, speed))

        oracle = max(total([0, a, b]) for a in range(40) for b in range(40))
        offsets = maxband_offsets(plans, lengths, speed)
        assert offsets[0] == 0
        assert total(offsets) == pytest.approx(oracle)

    def test_three_signals_beat_zero_offsets(self):
        plans = [plan_from_ratios(80, 0.5, 0.2, 12) for _ in range(3)]
        lengths = [1200, 1500]
        speed = 60 / 3.6
        offsets = maxband_offsets(plans, lengths, speed, starts=8, seed=1)
        assert sum(bandwidth(offsets, plans, lengths, speed)) >= sum(bandwidth([0, 0, 0], plans, lengths, speed))

    def test_deterministic(self):
        plans = [plan_from_ratios(80, 0.5, 0.2, 12) for _ in range(3)]
        a = maxband_offsets(plans, [1200, 1500], 15.0, seed=3)
        b = maxband_offsets(plans, [1200, 1500], 15.0, seed=3)
        assert a == b

    def test_maxband_plans_for_scenario(self, desk_scenario):
        plans = maxband_plans(desk_scenario, hour=12, config=BaselineConfig(), loss_time=12)
        assert len(plans) == desk_scenario.K
        assert {p.cycle for p in plans} == {120}
        assert plans[0].absolute_offset == 0
