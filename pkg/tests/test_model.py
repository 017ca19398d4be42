"""Tests for picking_core.model: domain types and the ground-truth grasp evaluator."""

from __future__ import annotations

import numpy as np
import pytest

from picking_core.errors import ConfigError, ContractViolation
from picking_core.model import (
    Action,
    FailureProfile,
    GraspSite,
    ObjectInstance,
    TimeModel,
    evaluate_grasp,
    remove_object,
)
from tests.builders import heap_of, ring_object


def _action(obj: ObjectInstance, gripper: int, site_id: int) -> Action:
    return Action(gripper, obj.object_id, site_id, obj.site(site_id).position)


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

class TestValueTypes:
    def test_quality_outside_unit_interval_rejected(self):
        with pytest.raises(ValueError):
            GraspSite(0, (0.0, 0.0), 1.5)

    def test_site_outside_footprint_rejected(self):
        with pytest.raises(ValueError, match="outside the footprint"):
            ObjectInstance(0, (0.1, 0.1), 0.02, (GraspSite(0, (0.2, 0.1), 0.5),))

    def test_object_needs_sites(self):
        with pytest.raises(ValueError):
            ObjectInstance(0, (0.1, 0.1), 0.02, ())

    def test_blocked_sites_must_exist(self):
        with pytest.raises(ValueError, match="do not exist"):
            ring_object(0, (0.1, 0.1), hidden=FailureProfile(blocked_sites=frozenset({9})))

    def test_success_probability_range(self):
        with pytest.raises(ValueError):
            FailureProfile(per_gripper_success_prob={0: 1.2})

    def test_unknown_site_lookup_is_contract_violation(self):
        obj = ring_object(0, (0.1, 0.1))
        with pytest.raises(ContractViolation):
            obj.site(42)

    def test_remaining_must_be_heap_objects(self):
        heap = heap_of(ring_object(0, (0.1, 0.1)))
        with pytest.raises(ValueError):
            type(heap)(heap.bin_dims, heap.objects, frozenset({0, 5}), heap.seed)


# ---------------------------------------------------------------------------
# evaluate_grasp
# ---------------------------------------------------------------------------

class TestEvaluateGrasp:
    def test_no_failures_always_succeeds(self):
        obj = ring_object(0, (0.1, 0.1))
        heap = heap_of(obj)
        assert all(evaluate_grasp(heap, _action(obj, g, s)) == 1 for g in (0, 1) for s in range(4))

    def test_type_failure_only_for_failing_gripper(self):
        obj = ring_object(0, (0.1, 0.1), hidden=FailureProfile(type_failing_grippers=frozenset({0})))
        heap = heap_of(obj)
        assert evaluate_grasp(heap, _action(obj, 0, 2)) == 0
        assert evaluate_grasp(heap, _action(obj, 1, 2)) == 1

    def test_blocked_site_fails_for_every_gripper(self):
        obj = ring_object(0, (0.1, 0.1), hidden=FailureProfile(blocked_sites=frozenset({1})))
        heap = heap_of(obj)
        assert evaluate_grasp(heap, _action(obj, 0, 1)) == 0
        assert evaluate_grasp(heap, _action(obj, 1, 1)) == 0
        assert evaluate_grasp(heap, _action(obj, 1, 0)) == 1

    def test_does_not_mutate_heap(self):
        obj = ring_object(0, (0.1, 0.1), hidden=FailureProfile(type_failing_grippers=frozenset({0})))
        heap = heap_of(obj)
        evaluate_grasp(heap, _action(obj, 0, 0))
        assert heap.remaining == frozenset({0})

    def test_probabilistic_outcome_follows_stream(self):
        obj = ring_object(0, (0.1, 0.1), hidden=FailureProfile(per_gripper_success_prob={0: 0.5, 1: 0.5}))
        heap = heap_of(obj)
        first = [evaluate_grasp(heap, _action(obj, 0, 0), np.random.default_rng(3)) for _ in range(5)]
        second = [evaluate_grasp(heap, _action(obj, 0, 0), np.random.default_rng(3)) for _ in range(5)]
        assert first == second

    @pytest.mark.parametrize("prob, expected", [(1.0, 1), (0.0, 0)])
    def test_probabilistic_extremes(self, prob: float, expected: int):
        obj = ring_object(0, (0.1, 0.1), hidden=FailureProfile(per_gripper_success_prob={0: prob, 1: prob}))
        rng = np.random.default_rng(0)
        assert all(evaluate_grasp(heap_of(obj), _action(obj, 1, 3), rng) == expected for _ in range(50))

    def test_probabilistic_without_stream_is_contract_violation(self):
        obj = ring_object(0, (0.1, 0.1), hidden=FailureProfile(per_gripper_success_prob={0: 0.9, 1: 0.9}))
        with pytest.raises(ContractViolation):
            evaluate_grasp(heap_of(obj), _action(obj, 0, 0))

    def test_removed_object_is_contract_violation(self):
        obj = ring_object(0, (0.1, 0.1))
        heap = remove_object(heap_of(obj), 0)
        with pytest.raises(ContractViolation, match="not in the heap"):
            evaluate_grasp(heap, _action(obj, 0, 0))

    def test_position_mismatch_is_contract_violation(self):
        obj = ring_object(0, (0.1, 0.1))
        with pytest.raises(ContractViolation):
            evaluate_grasp(heap_of(obj), Action(0, 0, 0, (0.0, 0.0)))


# ---------------------------------------------------------------------------
# remove_object / TimeModel
# ---------------------------------------------------------------------------

class TestRemoveObject:
    def test_removes_only_target(self):
        heap = heap_of(ring_object(0, (0.1, 0.1)), ring_object(1, (0.3, 0.3)))
        after = remove_object(heap, 0)
        assert after.remaining == frozenset({1})
        assert heap.remaining == frozenset({0, 1})
        assert after.objects == heap.objects

    def test_double_remove_is_contract_violation(self):
        heap = remove_object(heap_of(ring_object(0, (0.1, 0.1))), 0)
        with pytest.raises(ContractViolation):
            remove_object(heap, 0)


class TestTimeModel:
    def test_defaults_match_twelve_second_pick(self):
        assert TimeModel().per_attempt_s == 12.0

    @pytest.mark.parametrize(
        "kwargs, key",
        [
            ({"t_plan_s": -1.0}, "time.t_plan_s"),
            ({"t_plan_s": 0.0, "t_exec_s": 0.0}, "time.t_exec_s"),
            ({"mode": "wallclock"}, "time.mode"),
            ({"t_pick_s": 0.0}, "time.t_pick_s"),
        ],
    )
    def test_invalid_values_name_the_key(self, kwargs, key: str):
        with pytest.raises(ConfigError) as info:
            TimeModel(**kwargs)
        assert info.value.key == key
