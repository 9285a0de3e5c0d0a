import numpy as np
import pytest

from greenwave.coordinator import unify, unify_variable
from greenwave.signals import CYCLE_ACTIONS, G1_ACTIONS, G2_ACTIONS, TscAction


class TestUnifyVariable:
    def test_strict_majority(self):
        assert unify_variable([60, 60, 60, 70], CYCLE_ACTIONS) == 60

    def test_closest_to_mean(self):
        assert unify_variable([60, 60, 70, 80], CYCLE_ACTIONS) == 70

    def test_midpoint_takes_larger(self):
        assert unify_variable([60, 60, 70, 70], CYCLE_ACTIONS) == 70

    def test_ratio_midpoint_takes_larger(self):
        assert unify_variable([0.2, 0.2, 0.3, 0.3], G1_ACTIONS) == 0.3

    def test_single_value(self):
        assert unify_variable([90], CYCLE_ACTIONS) == 90


class TestUnify:
    def test_disabled_is_identity(self):
        intended = [TscAction(60, 0.5, 0.2), TscAction(90, 0.3, 0.1)]
        assert unify(intended, enabled=False) == intended

    def test_every_signal_gets_same_triple(self):
        intended = [
            TscAction(60, 0.5, 0.2),
            TscAction(60, 0.5, 0.2),
            TscAction(70, 0.6, 0.3),
            TscAction(80, 0.7, 0.1),
        ]
        result = unify(intended, enabled=True)
        assert len(result) == 4
        assert len(set(result)) == 1
        assert result[0].cycle == 70

    def test_unanimous(self):
        intended = [TscAction(120, 0.4, 0.3)] * 7
        assert unify(intended, enabled=True) == intended

    def test_empty_input(self):
        with pytest.raises(ValueError):
            unify([], enabled=True)


class TestRandomProposals:
    @pytest.mark.parametrize("space", [CYCLE_ACTIONS, G1_ACTIONS, G2_ACTIONS])
    def test_order_does_not_matter(self, space):
        rng = np.random.default_rng(17)
        for _ in range(200):
            values = [space[i] for i in rng.integers(0, len(space), size=int(rng.integers(1, 12)))]
            unified = unify_variable(values, space)
            assert unified in space
            shuffled = [values[i] for i in rng.permutation(len(values))]
            assert unify_variable(shuffled, space) == unified

    def test_unified_action_is_valid(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            intended = [
                TscAction(
                    int(rng.choice(CYCLE_ACTIONS)), float(rng.choice(G1_ACTIONS)), float(rng.choice(G2_ACTIONS))
                )
                for _ in range(int(rng.integers(1, 8)))
            ]
            result = unify(intended, enabled=True)
            assert len(set(result)) == 1
            assert min(a.cycle for a in intended) <= result[0].cycle <= max(a.cycle for a in intended)
