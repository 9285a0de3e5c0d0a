from dataclasses import replace

import numpy as np
import pytest

from greenwave.signals import (
    CYCLE_ACTIONS,
    G1_ACTIONS,
    G2_ACTIONS,
    MOVEMENT_PHASE,
    InfeasiblePlanError,
    InvalidActionError,
    InvalidQueryError,
    PhaseQuery,
    SignalController,
    SignalPlan,
    TscAction,
    apply_offset,
    compute_splits,
    exact_greens,
    movement_is_green,
    next_cycle_boundary,
    offset_actions,
    plan_from_ratios,
    plan_to_dict,
)


class TestTscAction:
    def test_valid_action(self):
        action = TscAction(100, 0.6, 0.2)
        assert action.cycle == 100

    @pytest.mark.parametrize("cycle,g1,g2", [(35, 0.5, 0.2), (100, 0.9, 0.2), (100, 0.5, 0.25)])
    def test_outside_action_space(self, cycle, g1, g2):
        with pytest.raises(InvalidActionError):
            TscAction(cycle, g1, g2)


class TestComputeSplits:
    def test_exact_greens(self):
        greens = exact_greens(100, 0.6, 0.2, 10)
        assert greens == pytest.approx((10.8, 32.4, 10.8, 7.2, 21.6, 7.2))

    def test_symmetric_ratios_without_loss(self):
        plan = plan_from_ratios(40, 0.5, 0.25, 0)
        assert plan.greens == (5.0, 10.0, 5.0, 5.0, 10.0, 5.0)
        assert sum(plan.greens) == 40

    def test_rounded_plan(self):
        plan = compute_splits(TscAction(100, 0.6, 0.2), loss_time=10)
        assert plan.greens == (11.0, 32.0, 11.0, 7.0, 22.0, 7.0)

    def test_residue_goes_to_larger_through_phase(self):
        # 88 s of green rounds to 89; the N-S through phase gives back the second
        plan = compute_splits(TscAction(100, 0.6, 0.2))
        assert plan.greens == (11.0, 31.0, 11.0, 7.0, 21.0, 7.0)
        assert sum(plan.greens) == 88

    @pytest.mark.parametrize("cycle", [40, 60, 90, 150, 180])
    @pytest.mark.parametrize("g1", [0.2, 0.5, 0.8])
    @pytest.mark.parametrize("g2", [0.1, 0.3, 0.4])
    def test_greens_sum_to_effective_cycle(self, cycle, g1, g2):
        plan = compute_splits(TscAction(cycle, g1, g2))
        assert sum(plan.greens) == pytest.approx(cycle - 12)
        assert plan.greens[0] == plan.greens[2]
        assert plan.greens[3] == plan.greens[5]
        assert all(g >= 0 for g in plan.greens)

    def test_loss_time_too_long(self):
        with pytest.raises(InfeasiblePlanError):
            compute_splits(TscAction(40, 0.5, 0.2), loss_time=40)

    def test_plan_rejects_unequal_pairs(self):
        with pytest.raises(InfeasiblePlanError, match="colour"):
            SignalPlan(cycle=40, loss_time=0, greens=(5, 10, 6, 5, 9, 5))


class TestApplyOffset:
    def test_zero_offset(self):
        upstream = compute_splits(TscAction(60, 0.5, 0.2))
        plan = apply_offset(compute_splits(TscAction(60, 0.5, 0.2)), 0, upstream)
        assert plan.absolute_offset == 0

    def test_wraps_modulo_downstream_cycle(self):
        upstream = plan_from_ratios(60, 0.5, 0.2, 12, offset=20)
        downstream = plan_from_ratios(50, 0.5, 0.2, 12)
        assert apply_offset(downstream, 35, upstream).absolute_offset == 5

    def test_chain_accumulates(self):
        first = compute_splits(TscAction(60, 0.5, 0.2))
        second = apply_offset(first, 10, first)
        third = apply_offset(first, 10, second)
        assert [p.absolute_offset for p in (first, second, third)] == [0, 10, 20]

    def test_offset_outside_space(self):
        upstream = compute_splits(TscAction(40, 0.5, 0.2))
        with pytest.raises(InvalidActionError):
            apply_offset(upstream, 40, upstream)
        with pytest.raises(InvalidActionError):
            apply_offset(upstream, 7, upstream)

    def test_offset_actions(self):
        assert offset_actions(40) == (0, 5, 10, 15, 20, 25, 30, 35)
        assert len(offset_actions(180)) == 36


class TestIsGreen:
    @pytest.fixture
    def plan(self) -> SignalPlan:
        return SignalPlan(cycle=100, loss_time=10, greens=exact_greens(100, 0.6, 0.2, 10), absolute_offset=7)

    def test_cycle_start_serves_phase_one(self, plan):
        assert movement_is_green(plan, PhaseQuery(1, ("S", "L"), 7))
        assert not movement_is_green(plan, PhaseQuery(1, ("N", "T"), 7))

    def test_periodic(self, plan):
        for movement in [("S", "L"), ("N", "T"), ("E", "R")]:
            assert movement_is_green(plan, PhaseQuery(1, movement, 7)) == movement_is_green(
                plan, PhaseQuery(1, movement, 107)
            )

    def test_second_phase_after_loss_slice(self, plan):
        t = 7 + 11.8 + plan.loss_slice
        assert movement_is_green(plan, PhaseQuery(1, ("N", "T"), t))
        assert movement_is_green(plan, PhaseQuery(1, ("S", "R"), t))
        assert not movement_is_green(plan, PhaseQuery(1, ("S", "L"), t))

    def test_loss_time_is_never_green(self, plan):
        t = 7 + 10.8 + plan.loss_slice / 2
        assert plan.active_phase(t) is None

    def test_unknown_movement(self, plan):
        with pytest.raises(InvalidQueryError):
            movement_is_green(plan, PhaseQuery(1, ("X", "T"), 0))

    def test_negative_time(self, plan):
        with pytest.raises(InvalidQueryError):
            movement_is_green(plan, PhaseQuery(1, ("S", "L"), -1))


class TestSignalController:
    def test_next_cycle_boundary(self):
        plan = plan_from_ratios(60, 0.5, 0.2, 12, offset=10)
        assert next_cycle_boundary(plan, 10) == 10
        assert next_cycle_boundary(plan, 11) == 70

    def test_new_plan_waits_for_cycle_start(self):
        old = plan_from_ratios(60, 0.5, 0.2, 12)
        new = plan_from_ratios(90, 0.5, 0.2, 12)
        controller = SignalController(old)
        controller.submit(new, 30)
        assert controller.plan_at(59) == old
        assert controller.plan_at(60) == new
        assert controller.pending is None

    def test_resubmitting_running_plan_is_noop(self):
        plan = plan_from_ratios(60, 0.5, 0.2, 12)
        controller = SignalController(plan)
        controller.submit(plan, 30)
        assert controller.pending is None


def test_plan_to_dict():
    plan = plan_from_ratios(40, 0.5, 0.25, 0, offset=5)
    assert plan_to_dict(plan) == {
        "cycle": 40,
        "loss_time": 0,
        "greens": [5.0, 10.0, 5.0, 5.0, 10.0, 5.0],
        "absolute_offset": 5,
    }


class TestRandomPlans:
    @pytest.mark.parametrize("seed", range(5))
    def test_greens_integrate_over_one_cycle(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(20):
            action = TscAction(int(rng.choice(CYCLE_ACTIONS)), float(rng.choice(G1_ACTIONS)), float(rng.choice(G2_ACTIONS)))
            plan = replace(compute_splits(action), absolute_offset=float(rng.integers(0, action.cycle)))
            assert sum(plan.greens) + plan.loss_time == pytest.approx(plan.cycle)
            seconds = [plan.active_phase(plan.absolute_offset + k + 0.5) for k in range(action.cycle)]
            for phase in range(1, 7):
                assert seconds.count(phase) == plan.greens[phase - 1]
            assert seconds.count(None) == plan.loss_time

    @pytest.mark.parametrize("seed", range(5))
    def test_conflicting_movements_never_green_together(self, seed):
        rng = np.random.default_rng(seed)
        action = TscAction(int(rng.choice(CYCLE_ACTIONS)), float(rng.choice(G1_ACTIONS)), float(rng.choice(G2_ACTIONS)))
        plan = compute_splits(action)
        for t in rng.uniform(0, 3 * action.cycle, size=200):
            green = [m for m in MOVEMENT_PHASE if movement_is_green(plan, PhaseQuery(1, m, float(t)))]
            assert len({MOVEMENT_PHASE[m] for m in green}) <= 1
            assert not ({"N", "S"} & {a for a, _ in green} and {"E", "W"} & {a for a, _ in green})
