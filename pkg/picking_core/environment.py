"""Heap generation and hidden failure-profile assignment.

Geometry and failure profiles come from separate RNG streams derived from the
trial seed, so the failure structure of a heap does not depend on its layout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, HeapGenerationError
from .geometry import Point, boundary_points
from .model import FailureProfile, GraspSite, HeapState, ObjectInstance

logger = logging.getLogger(__name__)

GEOMETRY_STREAM = 0
PROFILE_STREAM = 1
OUTCOME_STREAM = 2

# Candidate centres drawn per batch, and per object before the layout restarts.
_CANDIDATES_PER_BATCH = 64
_ATTEMPTS_PER_OBJECT = 256


class EnvironmentKind(str, Enum):
    TYPE_FAILURES = "type_failures"
    PLACEMENT_FAILURES = "placement_failures"
    BOTH_FAILURES = "both_failures"
    PROBABILISTIC = "probabilistic"


@dataclass(frozen=True)
class ProbabilisticConfig:
    """Sampling range for per-gripper success probabilities."""

    low: float = 0.85
    high: float = 0.95

    def __post_init__(self) -> None:
        if not 0.0 <= self.low <= 1.0:
            raise ConfigError("environment.success_prob_low", "must lie in [0, 1]")
        if not 0.0 <= self.high <= 1.0:
            raise ConfigError("environment.success_prob_high", "must lie in [0, 1]")
        if self.low > self.high:
            raise ConfigError("environment.success_prob_low", f"low {self.low} exceeds high {self.high}")


@dataclass(frozen=True)
class EnvConfig:
    kind: EnvironmentKind = EnvironmentKind.TYPE_FAILURES
    n_objects: int = 12
    n_grippers: int = 2
    placement_block_fraction: float = 0.30
    bin_dims: Tuple[float, float] = (0.40, 0.40)
    radius_range: Tuple[float, float] = (0.03, 0.06)
    boundary_sites: int = 16
    success_prob: ProbabilisticConfig = field(default_factory=ProbabilisticConfig)
    max_placement_attempts: int = 10_000

    def __post_init__(self) -> None:
        if not isinstance(self.kind, EnvironmentKind):
            raise ConfigError("environment.kind", f"unknown environment {self.kind!r}")
        if self.n_objects < 0:
            raise ConfigError("environment.n_objects", "must be >= 0")
        if self.n_grippers < 2:
            raise ConfigError("environment.n_grippers", "at least 2 grippers are required")
        if not 0.0 < self.placement_block_fraction < 1.0:
            raise ConfigError("environment.placement_block_fraction", "must lie in (0, 1)")
        width, height = self.bin_dims
        if width <= 0.0 or height <= 0.0:
            raise ConfigError("environment.bin_width", "bin dimensions must be positive")
        low, high = self.radius_range
        if not 0.0 < low <= high:
            raise ConfigError("environment.radius_min", "need 0 < radius_min <= radius_max")
        if 2.0 * high > min(width, height):
            raise ConfigError("environment.radius_max", "the largest object does not fit in the bin")
        if self.boundary_sites < 1:
            raise ConfigError("environment.boundary_sites", "must be >= 1")
        if self.max_placement_attempts < 1:
            raise ConfigError("environment.max_placement_attempts", "must be >= 1")
        if self.kind is EnvironmentKind.TYPE_FAILURES and self.n_objects % self.n_grippers:
            raise ConfigError(
                "environment.n_objects",
                f"{self.n_objects} objects cannot be split evenly across {self.n_grippers} grippers",
            )
        if self.kind is EnvironmentKind.BOTH_FAILURES and self.n_objects % 2:
            raise ConfigError("environment.n_objects", "the mixed environment needs an even object count")


def _tightest_fit(
    candidates: np.ndarray, radius: float, centers: np.ndarray, radii: np.ndarray, bin_dims: Tuple[float, float]
) -> Optional[np.ndarray]:
    """Pick the feasible candidate centre with the least clearance to a wall or a placed disk."""
    width, height = bin_dims
    clearance = np.minimum.reduce(
        [
            candidates[:, 0] - radius,
            width - radius - candidates[:, 0],
            candidates[:, 1] - radius,
            height - radius - candidates[:, 1],
        ]
    )
    if len(centers):
        gaps = np.linalg.norm(candidates[:, None, :] - centers[None, :, :], axis=2) - radii[None, :] - radius
        nearest = gaps.min(axis=1)
        clearance = np.where(nearest > 0.0, np.minimum(clearance, nearest), np.inf)
    if np.isinf(clearance).all():
        return None
    return candidates[int(np.argmin(clearance))]


def _place_disks(config: EnvConfig, rng: np.random.Generator) -> List[Tuple[Point, float]]:
    """Lay out non-overlapping disks fully inside the bin.

    Every layout draws fresh radii and places them largest first, each at the
    tightest of a batch of uniform candidate centres. A layout that cannot
    place an object restarts; every candidate counts toward
    ``max_placement_attempts``.
    """
    n = config.n_objects
    width, height = config.bin_dims
    low, high = config.radius_range
    attempts = 0
    best = 0
    while True:
        radii = np.sort(rng.uniform(low, high, size=n))[::-1]
        centers = np.zeros((0, 2))
        for radius in radii:
            center: Optional[np.ndarray] = None
            tried = 0
            while center is None and tried < _ATTEMPTS_PER_OBJECT:
                budget = config.max_placement_attempts - attempts
                size = min(_CANDIDATES_PER_BATCH, _ATTEMPTS_PER_OBJECT - tried, budget)
                if size <= 0:
                    raise HeapGenerationError(config.max_placement_attempts, best, n)
                candidates = rng.uniform((radius, radius), (width - radius, height - radius), size=(size, 2))
                attempts += size
                tried += size
                center = _tightest_fit(candidates, float(radius), centers, radii[: len(centers)], config.bin_dims)
            if center is None:
                break
            centers = np.vstack([centers, center])
        best = max(best, len(centers))
        if len(centers) == n:
            logger.debug("layout placed=%d attempts=%d", n, attempts)
            return [((float(x), float(y)), float(radius)) for (x, y), radius in zip(centers, radii)]
        logger.debug("layout restart placed=%d attempts=%d", len(centers), attempts)


def _build_object(
    object_id: int, center: Point, radius: float, config: EnvConfig, rng: np.random.Generator
) -> ObjectInstance:
    phase = float(rng.uniform(0.0, 2.0 * math.pi))
    ring = boundary_points(center, radius, config.boundary_sites, phase)
    qualities = rng.uniform(0.0, 1.0, size=config.boundary_sites + 1)
    sites = [GraspSite(k, point, float(qualities[k])) for k, point in enumerate(ring)]
    sites.append(GraspSite(config.boundary_sites, center, float(qualities[-1]), on_boundary=False))
    return ObjectInstance(object_id, center, radius, tuple(sites))


def _with_profiles(heap: HeapState, profiles: Dict[int, FailureProfile]) -> HeapState:
    objects = {
        object_id: obj.with_profile(profiles[object_id]) if object_id in profiles else obj
        for object_id, obj in heap.objects.items()
    }
    return HeapState(heap.bin_dims, objects, heap.remaining, heap.seed)


def _blocked_count(fraction: float, n_boundary: int) -> int:
    # the epsilon keeps products like 0.3 * 10 from flooring to 2
    return math.floor(fraction * n_boundary + 1e-9)


def _type_profiles(object_ids: List[int], n_grippers: int, rng: np.random.Generator) -> Dict[int, FailureProfile]:
    order = rng.permutation(len(object_ids))
    return {
        object_ids[int(idx)]: FailureProfile(type_failing_grippers=frozenset({rank % n_grippers}))
        for rank, idx in enumerate(order)
    }


def _placement_profiles(
    heap: HeapState, object_ids: List[int], fraction: float, rng: np.random.Generator
) -> Dict[int, FailureProfile]:
    profiles = {}
    for object_id in object_ids:
        ring = heap.objects[object_id].boundary_sites
        count = _blocked_count(fraction, len(ring))
        start = int(rng.integers(len(ring)))
        blocked = frozenset(ring[(start + k) % len(ring)].site_id for k in range(count))
        profiles[object_id] = FailureProfile(blocked_sites=blocked)
    return profiles


def assign_type_failures(heap: HeapState, n_grippers: int, rng: np.random.Generator) -> HeapState:
    """Give every object exactly one type-failing gripper, balanced across grippers."""
    if n_grippers < 2:
        raise ConfigError("environment.n_grippers", "type failures need at least 2 grippers")
    object_ids = sorted(heap.objects)
    if len(object_ids) % n_grippers:
        raise ConfigError(
            "environment.n_objects", f"{len(object_ids)} objects cannot be split evenly across {n_grippers} grippers"
        )
    return _with_profiles(heap, _type_profiles(object_ids, n_grippers, rng))


def assign_placement_failures(heap: HeapState, fraction: float, rng: np.random.Generator) -> HeapState:
    """Block a contiguous run of floor(fraction * n_boundary) boundary sites on every object."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError("environment.placement_block_fraction", "must lie in (0, 1)")
    return _with_profiles(heap, _placement_profiles(heap, sorted(heap.objects), fraction, rng))


def assign_mixed(heap: HeapState, n_grippers: int, fraction: float, rng: np.random.Generator) -> HeapState:
    """Half the objects get type failures, the other half placement failures."""
    if n_grippers < 2:
        raise ConfigError("environment.n_grippers", "type failures need at least 2 grippers")
    if not 0.0 < fraction < 1.0:
        raise ConfigError("environment.placement_block_fraction", "must lie in (0, 1)")
    object_ids = sorted(heap.objects)
    if len(object_ids) % 2:
        raise ConfigError("environment.n_objects", "the mixed environment needs an even object count")
    order = [object_ids[int(idx)] for idx in rng.permutation(len(object_ids))]
    half = len(order) // 2
    type_ids, placement_ids = order[:half], sorted(order[half:])
    profiles = {
        object_id: FailureProfile(type_failing_grippers=frozenset({rank % n_grippers}))
        for rank, object_id in enumerate(type_ids)
    }
    profiles.update(_placement_profiles(heap, placement_ids, fraction, rng))
    return _with_profiles(heap, profiles)


def assign_probabilistic(
    heap: HeapState, prob_config: ProbabilisticConfig, rng: np.random.Generator, n_grippers: int = 2
) -> HeapState:
    """Draw a success probability per object and gripper from ``[low, high]``."""
    if prob_config.low > prob_config.high:
        raise ConfigError("environment.success_prob_low", "low exceeds high")
    profiles = {}
    for object_id in sorted(heap.objects):
        probs = rng.uniform(prob_config.low, prob_config.high, size=n_grippers)
        profiles[object_id] = FailureProfile(
            per_gripper_success_prob={gripper: float(probs[gripper]) for gripper in range(n_grippers)}
        )
    return _with_profiles(heap, profiles)


def assign_profiles(heap: HeapState, config: EnvConfig, rng: np.random.Generator) -> HeapState:
    if config.kind is EnvironmentKind.TYPE_FAILURES:
        return assign_type_failures(heap, config.n_grippers, rng)
    if config.kind is EnvironmentKind.PLACEMENT_FAILURES:
        return assign_placement_failures(heap, config.placement_block_fraction, rng)
    if config.kind is EnvironmentKind.BOTH_FAILURES:
        return assign_mixed(heap, config.n_grippers, config.placement_block_fraction, rng)
    return assign_probabilistic(heap, config.success_prob, rng, n_grippers=config.n_grippers)


def stream(seed: int, offset: int) -> np.random.Generator:
    return np.random.default_rng([seed, offset])


def generate_heap(config: EnvConfig, trial_seed: int) -> HeapState:
    """Lay out ``config.n_objects`` disks and assign their hidden failure profiles.

    Deterministic in ``(config, trial_seed)``.
    """
    geometry_rng = stream(trial_seed, GEOMETRY_STREAM)
    layout = _place_disks(config, geometry_rng)
    objects = {
        object_id: _build_object(object_id, center, radius, config, geometry_rng)
        for object_id, (center, radius) in enumerate(layout)
    }
    heap = HeapState(config.bin_dims, objects, frozenset(objects), trial_seed)
    return assign_profiles(heap, config, stream(trial_seed, PROFILE_STREAM))
