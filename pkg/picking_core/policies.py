"""Markov and memory-based (masking) picking policies.

Every policy works on the same observe -> select -> update cycle. Memory lives
in an immutable :class:`MaskState`; selectors and updaters return new values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterator, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError
from .geometry import Point, as_points, distances_to, point_in_circle, within_circles
from .model import Action, GraspSite, GripperId, HeapState, TrialRecord, remove_object


class PolicyKind(str, Enum):
    MARKOV = "markov"
    CLUSTER = "cluster"
    CIRCLE = "circle"
    SWAP = "swap"


UNSUPPORTED_POLICIES: Dict[str, str] = {
    "cache": (
        "the cache policy is not provided: with perfect segmentation and tracking it behaves "
        "exactly like 'cluster', so use 'cluster' instead"
    ),
}


def parse_policy_kind(name: str, key: str = "experiment.policies") -> PolicyKind:
    normalized = str(name).strip().lower()
    if normalized in UNSUPPORTED_POLICIES:
        raise ConfigError(key, UNSUPPORTED_POLICIES[normalized])
    try:
        return PolicyKind(normalized)
    except ValueError:
        known = ", ".join(kind.value for kind in PolicyKind)
        raise ConfigError(key, f"unknown policy {name!r} (expected one of: {known})") from None


@dataclass(frozen=True)
class PolicyConfig:
    """Policy selection plus mask radii in meters.

    ``swap_min_radius`` defaults to a quarter of ``circle_radius`` (two
    halvings); ``swap_search_radius`` defaults to ``circle_radius``.
    """

    kind: PolicyKind = PolicyKind.MARKOV
    circle_radius: float = 0.015
    swap_min_radius: Optional[float] = None
    swap_search_radius: Optional[float] = None

    def __post_init__(self) -> None:
        if not isinstance(self.kind, PolicyKind):
            raise ConfigError("experiment.policies", f"unknown policy {self.kind!r}")
        if self.circle_radius <= 0.0:
            raise ConfigError("policy.circle_radius", "must be > 0")
        if not 0.0 < self.min_radius < self.circle_radius:
            raise ConfigError("policy.swap_min_radius", "need 0 < swap_min_radius < circle_radius")
        if self.search_radius <= 0.0:
            raise ConfigError("policy.swap_search_radius", "must be > 0")

    @property
    def min_radius(self) -> float:
        return self.circle_radius / 4.0 if self.swap_min_radius is None else self.swap_min_radius

    @property
    def search_radius(self) -> float:
        return self.circle_radius if self.swap_search_radius is None else self.swap_search_radius

    def resolved(self) -> "PolicyConfig":
        return replace(self, swap_min_radius=self.min_radius, swap_search_radius=self.search_radius)


# ---------------------------------------------------------------------------
# Observation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObservedObject:
    object_id: int
    center: Point
    footprint_radius: float
    sites: Tuple[GraspSite, ...]


@dataclass(frozen=True, eq=False)
class SiteTable:
    """Flattened site columns of an observation, one row per grasp site."""

    object_ids: np.ndarray
    site_ids: np.ndarray
    positions: np.ndarray
    qualities: np.ndarray

    @classmethod
    def build(cls, objects: Sequence[ObservedObject]) -> "SiteTable":
        sites = [(obj.object_id, site) for obj in objects for site in obj.sites]
        return cls(
            object_ids=np.array([object_id for object_id, _ in sites], dtype=np.int64),
            site_ids=np.array([site.site_id for _, site in sites], dtype=np.int64),
            positions=as_points([site.position for _, site in sites]),
            qualities=np.array([site.quality for _, site in sites], dtype=float),
        )


@dataclass(frozen=True)
class Observation:
    """What a policy sees: geometry and qualities of the remaining objects, never failure profiles."""

    objects: Tuple[ObservedObject, ...]
    n_grippers: int
    table: SiteTable = field(compare=False, repr=False)

    @property
    def object_ids(self) -> Tuple[int, ...]:
        return tuple(obj.object_id for obj in self.objects)


def observe(heap: HeapState, n_grippers: int) -> Observation:
    objects = tuple(
        ObservedObject(obj.object_id, obj.center, obj.footprint_radius, obj.sites) for obj in heap.remaining_objects()
    )
    return Observation(objects, n_grippers, SiteTable.build(objects))


# ---------------------------------------------------------------------------
# Mask state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleMask:
    gripper: GripperId
    center: Point
    radius: float
    origin_step: int = 0

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("circle mask radius must be > 0")


@dataclass(frozen=True)
class SwapPending:
    failed_gripper: GripperId
    failure_point: Point
    failed_object_id: int


@dataclass(frozen=True)
class MaskState:
    """Per-trial policy memory. ``swap_mode`` is ``None`` in normal mode."""

    object_masks: FrozenSet[Tuple[GripperId, int]] = frozenset()
    circle_masks: Tuple[CircleMask, ...] = ()
    swap_mode: Optional[SwapPending] = None

    @property
    def is_empty(self) -> bool:
        return not self.object_masks and not self.circle_masks and self.swap_mode is None

    def circles_of(self, gripper: GripperId) -> Tuple[np.ndarray, np.ndarray]:
        own = [mask for mask in self.circle_masks if mask.gripper == gripper]
        return as_points([mask.center for mask in own]), np.array([mask.radius for mask in own], dtype=float)


def admissible(candidate: Action, mask: MaskState) -> bool:
    if (candidate.gripper, candidate.object_id) in mask.object_masks:
        return False
    centers, radii = mask.circles_of(candidate.gripper)
    return not bool(within_circles(as_points([candidate.position]), centers, radii)[0])


def _admissible_grid(obs: Observation, mask: MaskState) -> np.ndarray:
    """Boolean ``(n_grippers, n_sites)`` grid of admissible candidates."""
    table = obs.table
    grid = np.ones((obs.n_grippers, len(table.site_ids)), dtype=bool)
    for gripper, object_id in mask.object_masks:
        if gripper < obs.n_grippers:
            grid[gripper] &= table.object_ids != object_id
    for gripper in range(obs.n_grippers):
        centers, radii = mask.circles_of(gripper)
        if len(radii):
            grid[gripper] &= ~within_circles(table.positions, centers, radii)
    return grid


def _action_at(obs: Observation, gripper: int, row: int) -> Action:
    table = obs.table
    position = (float(table.positions[row, 0]), float(table.positions[row, 1]))
    return Action(int(gripper), int(table.object_ids[row]), int(table.site_ids[row]), position)


def _best_quality(obs: Observation, grid: np.ndarray) -> Optional[Action]:
    if not grid.any():
        return None
    table = obs.table
    scores = np.where(grid, table.qualities[None, :], -np.inf)
    grippers, rows = np.nonzero(scores == scores.max())
    gripper, row = min(
        zip(grippers.tolist(), rows.tolist()),
        key=lambda pair: (table.object_ids[pair[1]], table.site_ids[pair[1]], pair[0]),
    )
    return _action_at(obs, gripper, row)


def _nearest(
    obs: Observation,
    grid: np.ndarray,
    point: Point,
    exclude_gripper: GripperId,
    limit: Optional[float] = None,
    object_id: Optional[int] = None,
) -> Optional[Action]:
    table = obs.table
    gaps = distances_to(table.positions, point)
    allowed = grid.copy()
    if exclude_gripper < obs.n_grippers:
        allowed[exclude_gripper] = False
    if object_id is not None:
        allowed &= (table.object_ids == object_id)[None, :]
    if limit is not None:
        allowed &= (gaps <= limit)[None, :]
    if not allowed.any():
        return None
    grippers, rows = np.nonzero(allowed)
    gripper, row = min(
        zip(grippers.tolist(), rows.tolist()),
        key=lambda pair: (gaps[pair[1]], table.object_ids[pair[1]], table.site_ids[pair[1]], pair[0]),
    )
    return _action_at(obs, gripper, row)


# ---------------------------------------------------------------------------
# Selectors
# ---------------------------------------------------------------------------


def select_markov(obs: Observation, mask: MaskState) -> Optional[Action]:
    """Highest-quality admissible candidate.

    Ties go to the lowest ``(object_id, site_id, gripper)``.
    """
    return _best_quality(obs, _admissible_grid(obs, mask))


def shrink_masks(mask: MaskState, config: PolicyConfig) -> Tuple[MaskState, bool]:
    """Halve every circle radius whose half stays at or above ``config.min_radius``."""
    floor = config.min_radius
    shrunk = False
    circles = []
    for circle in mask.circle_masks:
        half = circle.radius / 2.0
        if half >= floor:
            circles.append(replace(circle, radius=half))
            shrunk = True
        else:
            circles.append(circle)
    return replace(mask, circle_masks=tuple(circles)), shrunk


def select_swap(obs: Observation, mask: MaskState, config: PolicyConfig) -> Tuple[Optional[Action], MaskState]:
    """Swap-policy selection; returns the action and the (possibly shrunk) mask state.

    After a failure the nearest alternate-gripper candidate within the search
    radius wins, then the nearest alternate on the failed object, then the
    quality argmax. When nothing is admissible the masks shrink and the
    selection retries until shrinking is exhausted.
    """
    while True:
        grid = _admissible_grid(obs, mask)
        if grid.any():
            pending = mask.swap_mode
            if pending is not None:
                action = _nearest(
                    obs, grid, pending.failure_point, pending.failed_gripper, limit=config.search_radius
                ) or _nearest(
                    obs, grid, pending.failure_point, pending.failed_gripper, object_id=pending.failed_object_id
                )
                if action is not None:
                    return action, mask
            return _best_quality(obs, grid), mask
        if not obs.objects:
            return None, mask
        mask, shrunk = shrink_masks(mask, config)
        if not shrunk:
            return None, mask


# ---------------------------------------------------------------------------
# Updaters
# ---------------------------------------------------------------------------


def update_cluster(mask: MaskState, action: Action, reward: int) -> MaskState:
    if reward:
        return mask
    return replace(mask, object_masks=mask.object_masks | {(action.gripper, action.object_id)})


def _lift_covered(mask: MaskState, action: Action) -> MaskState:
    """Drop other grippers' circles that contain a successful grasp point."""
    kept = tuple(
        circle
        for circle in mask.circle_masks
        if circle.gripper == action.gripper or not point_in_circle(action.position, circle.center, circle.radius)
    )
    return replace(mask, circle_masks=kept)


def update_circle(mask: MaskState, action: Action, reward: int, radius: float, step: int = 0) -> MaskState:
    if reward:
        return _lift_covered(mask, action)
    circle = CircleMask(action.gripper, action.position, radius, step)
    return replace(mask, circle_masks=(*mask.circle_masks, circle))


def update_swap(
    mask: MaskState, action: Action, reward: int, config: PolicyConfig, step: int = 0, n_grippers: int = 2
) -> MaskState:
    if reward:
        return replace(_lift_covered(mask, action), swap_mode=None)
    pending = mask.swap_mode
    if pending is None:
        return replace(mask, swap_mode=SwapPending(action.gripper, action.position, action.object_id))
    circles = tuple(
        CircleMask(gripper, point, config.circle_radius, step)
        for point in (pending.failure_point, action.position)
        for gripper in range(n_grippers)
    )
    return replace(mask, circle_masks=mask.circle_masks + circles, swap_mode=None)


# ---------------------------------------------------------------------------
# Policy facade
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PickingPolicy:
    config: PolicyConfig
    n_grippers: int = 2

    @property
    def name(self) -> str:
        return self.config.kind.value

    def initial_state(self) -> MaskState:
        return MaskState()

    def select(self, obs: Observation, mask: MaskState) -> Tuple[Optional[Action], MaskState]:
        kind = self.config.kind
        if kind is PolicyKind.MARKOV:
            return select_markov(obs, MaskState()), mask
        if kind is PolicyKind.SWAP:
            return select_swap(obs, mask, self.config)
        return select_markov(obs, mask), mask

    def update(self, mask: MaskState, action: Action, reward: int, step: int = 0) -> MaskState:
        kind = self.config.kind
        if kind is PolicyKind.CLUSTER:
            return update_cluster(mask, action, reward)
        if kind is PolicyKind.CIRCLE:
            return update_circle(mask, action, reward, self.config.circle_radius, step)
        if kind is PolicyKind.SWAP:
            return update_swap(mask, action, reward, self.config, step, self.n_grippers)
        return mask


def replay_masks(
    heap: HeapState, records: Sequence[TrialRecord], policy: PickingPolicy
) -> Iterator[Tuple[MaskState, Optional[Action], Action]]:
    """Rebuild the mask state in force before each recorded action.

    Yields ``(mask, reselected, recorded)`` per record, where ``reselected`` is
    what the policy picks again from that state.
    """
    mask = policy.initial_state()
    for step, record in enumerate(records):
        reselected, mask = policy.select(observe(heap, policy.n_grippers), mask)
        yield mask, reselected, record.action
        if record.reward:
            heap = remove_object(heap, record.action.object_id)
        mask = policy.update(mask, record.action, record.reward, step)
