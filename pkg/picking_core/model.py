"""Domain types shared by every module, plus the ground-truth grasp evaluator."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Optional, Tuple

import numpy as np

from .errors import ConfigError, ContractViolation
from .geometry import Point, distance

GripperId = int

# Site positions are computed with trigonometry, so "on the boundary" allows rounding.
_FOOTPRINT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GraspSite:
    site_id: int
    position: Point
    quality: float
    on_boundary: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"site {self.site_id}: quality {self.quality} outside [0, 1]")


@dataclass(frozen=True)
class FailureProfile:
    """Hidden ground truth for one object. Policies never see it."""

    type_failing_grippers: FrozenSet[GripperId] = frozenset()
    blocked_sites: FrozenSet[int] = frozenset()
    per_gripper_success_prob: Optional[Dict[GripperId, float]] = None

    def __post_init__(self) -> None:
        if self.per_gripper_success_prob is not None:
            for gripper, prob in self.per_gripper_success_prob.items():
                if not 0.0 <= prob <= 1.0:
                    raise ValueError(f"success probability {prob} for gripper {gripper} outside [0, 1]")

    @property
    def is_probabilistic(self) -> bool:
        return self.per_gripper_success_prob is not None


@dataclass(frozen=True)
class ObjectInstance:
    object_id: int
    center: Point
    footprint_radius: float
    sites: Tuple[GraspSite, ...]
    hidden: FailureProfile = field(default_factory=FailureProfile)

    def __post_init__(self) -> None:
        if not self.sites:
            raise ValueError(f"object {self.object_id} has no grasp sites")
        if self.footprint_radius <= 0.0:
            raise ValueError(f"object {self.object_id}: footprint radius must be positive")
        for site in self.sites:
            if distance(site.position, self.center) > self.footprint_radius + _FOOTPRINT_TOLERANCE:
                raise ValueError(f"object {self.object_id}: site {site.site_id} lies outside the footprint")
        unknown = self.hidden.blocked_sites - self.site_ids
        if unknown:
            raise ValueError(f"object {self.object_id}: blocked sites {sorted(unknown)} do not exist")

    @property
    def site_ids(self) -> FrozenSet[int]:
        return frozenset(site.site_id for site in self.sites)

    @property
    def boundary_sites(self) -> Tuple[GraspSite, ...]:
        return tuple(site for site in self.sites if site.on_boundary)

    def site(self, site_id: int) -> GraspSite:
        for site in self.sites:
            if site.site_id == site_id:
                return site
        raise ContractViolation(f"object {self.object_id} has no site {site_id}")

    def with_profile(self, hidden: FailureProfile) -> "ObjectInstance":
        return replace(self, hidden=hidden)


@dataclass(frozen=True)
class HeapState:
    bin_dims: Tuple[float, float]
    objects: Dict[int, ObjectInstance]
    remaining: FrozenSet[int]
    seed: int

    def __post_init__(self) -> None:
        stray = self.remaining - frozenset(self.objects)
        if stray:
            raise ValueError(f"remaining ids {sorted(stray)} are not heap objects")

    def remaining_objects(self) -> Tuple[ObjectInstance, ...]:
        return tuple(self.objects[object_id] for object_id in sorted(self.remaining))


@dataclass(frozen=True)
class Action:
    gripper: GripperId
    object_id: int
    site_id: int
    position: Point


class Termination(str, Enum):
    ALL_PICKED = "AllPicked"
    NO_GRASP_AVAILABLE = "NoGraspAvailable"
    CONSECUTIVE_FAILURE_LIMIT = "ConsecutiveFailureLimit"


@dataclass(frozen=True)
class TrialRecord:
    action: Action
    reward: int
    cumulative_time_s: float


@dataclass(frozen=True)
class TrialLog:
    records: Tuple[TrialRecord, ...]
    termination: Termination
    n_objects: int
    policy_name: str
    seed: int
    trial_index: int = 0
    environment: str = ""
    variant: str = ""

    @property
    def rewards(self) -> Tuple[int, ...]:
        return tuple(record.reward for record in self.records)

    @property
    def successes(self) -> int:
        return sum(self.rewards)


@dataclass(frozen=True)
class TimeModel:
    """Per-attempt planning and execution times.

    ``mode`` selects how trial duration is measured: ``simulated`` sums the
    per-attempt times; ``physical`` multiplies attempts by ``t_pick_s``.
    """

    t_plan_s: float = 2.0
    t_exec_s: float = 10.0
    mode: str = "simulated"
    t_pick_s: float = 12.0

    def __post_init__(self) -> None:
        if self.t_plan_s < 0.0:
            raise ConfigError("time.t_plan_s", "must be >= 0")
        if self.t_exec_s < 0.0:
            raise ConfigError("time.t_exec_s", "must be >= 0")
        if self.t_plan_s + self.t_exec_s <= 0.0:
            raise ConfigError("time.t_exec_s", "t_plan_s + t_exec_s must be > 0")
        if self.mode not in ("simulated", "physical"):
            raise ConfigError("time.mode", f"expected 'simulated' or 'physical', got {self.mode!r}")
        if self.t_pick_s <= 0.0:
            raise ConfigError("time.t_pick_s", "must be > 0")

    @property
    def per_attempt_s(self) -> float:
        return self.t_plan_s + self.t_exec_s


def _target(heap: HeapState, action: Action) -> Tuple[ObjectInstance, GraspSite]:
    if action.object_id not in heap.remaining:
        raise ContractViolation(f"object {action.object_id} is not in the heap")
    obj = heap.objects[action.object_id]
    site = obj.site(action.site_id)
    if tuple(action.position) != tuple(site.position):
        raise ContractViolation(
            f"action position {action.position} does not match site {action.site_id} of object {action.object_id}"
        )
    if action.gripper < 0:
        raise ContractViolation(f"gripper id {action.gripper} is negative")
    return obj, site


def evaluate_grasp(heap: HeapState, action: Action, rng: Optional[np.random.Generator] = None) -> int:
    """Ground-truth reward of ``action`` on ``heap``; never mutates the heap.

    Deterministic objects consume nothing from ``rng``. Objects with
    per-gripper success probabilities draw one Bernoulli sample from it.
    """
    obj, _ = _target(heap, action)
    hidden = obj.hidden
    if action.gripper in hidden.type_failing_grippers or action.site_id in hidden.blocked_sites:
        return 0
    if hidden.per_gripper_success_prob is None:
        return 1
    if rng is None:
        raise ContractViolation(f"object {obj.object_id} is probabilistic but no outcome stream was given")
    try:
        prob = hidden.per_gripper_success_prob[action.gripper]
    except KeyError as exc:
        raise ContractViolation(f"object {obj.object_id} has no success probability for gripper {action.gripper}") from exc
    return int(rng.random() < prob)


def remove_object(heap: HeapState, object_id: int) -> HeapState:
    if object_id not in heap.remaining:
        raise ContractViolation(f"object {object_id} was already removed or never existed")
    return replace(heap, remaining=heap.remaining - {object_id})
