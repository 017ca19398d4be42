"""Trial loop and experiment batches.

One trial runs observe -> select -> execute -> update until the heap is
cleared, no grasp can be selected, or the consecutive-failure limit is hit.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import List, Optional

import numpy as np

from picking_core.environment import OUTCOME_STREAM, EnvConfig, generate_heap, stream
from picking_core.errors import BatchFault, ConfigError, ContractViolation, EngineFault, PickingError
from picking_core.model import HeapState, TimeModel, Termination, TrialLog, TrialRecord, evaluate_grasp, remove_object
from picking_core.policies import PickingPolicy, PolicyConfig, observe

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    n_trials: int = 500
    time: TimeModel = field(default_factory=TimeModel)
    consecutive_failure_limit: int = 20
    master_seed: int = 0
    variant: str = ""

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise ConfigError("experiment.n_trials", "must be >= 1")
        if self.consecutive_failure_limit < 1:
            raise ConfigError("experiment.consecutive_failure_limit", "must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("experiment.master_seed", "must be a non-negative integer")


def trial_seed(master_seed: int, trial_index: int) -> int:
    """64-bit seed of trial ``trial_index``; independent of execution order."""
    state = np.random.SeedSequence([master_seed, trial_index]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def run_trial_on_heap(config: ExperimentConfig, heap: HeapState, trial_index: int = 0) -> TrialLog:
    policy = PickingPolicy(config.policy, config.env.n_grippers)
    outcomes = stream(heap.seed, OUTCOME_STREAM)
    per_attempt = config.time.per_attempt_s
    mask = policy.initial_state()
    records: List[TrialRecord] = []
    failures_in_row = 0
    termination: Optional[Termination] = None
    n_objects = len(heap.objects)

    while termination is None:
        if not heap.remaining:
            termination = Termination.ALL_PICKED
            break
        step = len(records)
        action, mask = policy.select(observe(heap, config.env.n_grippers), mask)
        if action is None:
            termination = Termination.NO_GRASP_AVAILABLE
            break
        try:
            reward = evaluate_grasp(heap, action, outcomes)
            if reward:
                heap = remove_object(heap, action.object_id)
        except ContractViolation as exc:
            raise EngineFault(step, str(exc)) from exc
        records.append(TrialRecord(action, reward, (step + 1) * per_attempt))
        failures_in_row = 0 if reward else failures_in_row + 1
        logger.debug(
            "trial=%d step=%d gripper=%d object=%d site=%d reward=%d",
            trial_index, step, action.gripper, action.object_id, action.site_id, reward,
        )
        mask = policy.update(mask, action, reward, step)
        if failures_in_row >= config.consecutive_failure_limit:
            termination = Termination.CONSECUTIVE_FAILURE_LIMIT

    return TrialLog(
        records=tuple(records),
        termination=termination,
        n_objects=n_objects,
        policy_name=policy.name,
        seed=heap.seed,
        trial_index=trial_index,
        environment=config.env.kind.value,
        variant=config.variant,
    )


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialLog:
    heap = generate_heap(config.env, trial_seed(config.master_seed, trial_index))
    return run_trial_on_heap(config, heap, trial_index)


def _run_indexed(config: ExperimentConfig, trial_index: int) -> TrialLog:
    try:
        return run_trial(config, trial_index)
    except PickingError as exc:
        raise BatchFault(trial_index, str(exc)) from exc


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> List[TrialLog]:
    """Run ``config.n_trials`` trials; the result is in trial-index order for any ``jobs``."""
    indices = range(config.n_trials)
    if jobs <= 1:
        logs = [_run_indexed(config, index) for index in indices]
    else:
        chunksize = max(1, config.n_trials // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            logs = list(executor.map(_run_indexed, repeat(config), indices, chunksize=chunksize))
    picked = sum(log.successes for log in logs)
    logger.info(
        "experiment environment=%s policy=%s trials=%d picked=%d",
        config.env.kind.value, config.policy.kind.value, len(logs), picked,
    )
    return logs
