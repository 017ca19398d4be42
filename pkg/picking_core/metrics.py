"""Sequential-failure statistics for single trials and trial batches."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .model import TimeModel, TrialLog

SECONDS_PER_HOUR = 3600.0


def _rewards_array(rewards: Sequence[int]) -> np.ndarray:
    arr = np.asarray(rewards, dtype=np.int64).reshape(-1)
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError("rewards must be 0 or 1")
    return arr


def sequential_failure_counts(rewards: Sequence[int]) -> Tuple[int, int]:
    """Return ``(M, F)``.

    M counts failures immediately followed by another failure; F counts
    successes immediately preceded by two or more failures.
    """
    arr = _rewards_array(rewards)
    fails = arr == 0
    m = int(np.count_nonzero(fails[:-1] & fails[1:]))
    f = int(np.count_nonzero((arr[2:] == 1) & fails[1:-1] & fails[:-2]))
    return m, f


def failure_runs(rewards: Sequence[int]) -> List[int]:
    """Lengths of the maximal runs of consecutive failures, in order."""
    return [len(list(group)) for value, group in itertools.groupby(rewards) if value == 0]


@dataclass(frozen=True)
class TrialStats:
    M: int
    F: int
    r: int
    n: int
    T_hours: float
    sequence_lengths: Tuple[int, ...]
    attempts: int = 0
    ends_in_failure: bool = False

    @property
    def has_attempts(self) -> bool:
        return self.attempts > 0

    @property
    def recovered_runs(self) -> Tuple[int, ...]:
        """Failure runs that ended in a success."""
        if self.ends_in_failure:
            return self.sequence_lengths[:-1]
        return self.sequence_lengths


def trial_stats(log: TrialLog, time_model: TimeModel) -> TrialStats:
    rewards = log.rewards
    m, f = sequential_failure_counts(rewards)
    attempts = len(rewards)
    if time_model.mode == "physical":
        seconds = attempts * time_model.t_pick_s
    else:
        seconds = log.records[-1].cumulative_time_s if log.records else 0.0
    return TrialStats(
        M=m,
        F=f,
        r=sum(rewards),
        n=log.n_objects,
        T_hours=seconds / SECONDS_PER_HOUR,
        sequence_lengths=tuple(failure_runs(rewards)),
        attempts=attempts,
        ends_in_failure=bool(rewards) and rewards[-1] == 0,
    )


@dataclass(frozen=True)
class AggregateReport:
    """Batch metrics. Statistics with no qualifying trial are ``None``."""

    sfr_mean: Optional[float]
    sfr_se: Optional[float]
    msl_ratio: Optional[float]
    msl_median: Optional[float]
    mpph_mean: Optional[float]
    mpph_se: Optional[float]
    posp: Optional[float]
    n_trials_used: int
    n_trials_excluded: int
    recovery_len_median: Optional[float] = None
    reliability: Optional[float] = None

    def status_text(self) -> str:
        def show(value: Optional[float], pattern: str) -> str:
            return "n/a" if value is None else format(value, pattern)

        return (
            f"SFR {show(self.sfr_mean, '.3g')} | MSL {show(self.msl_median, '.3g')} | "
            f"MPPH {show(self.mpph_mean, '.0f')} | POSP {show(self.posp, '.2f')}"
        )


def _mean(values: Sequence[float]) -> Optional[float]:
    # fsum is exactly rounded, so the result does not depend on input order
    if not values:
        return None
    return math.fsum(values) / len(values)


def _standard_error(values: Sequence[float]) -> Optional[float]:
    if len(values) < 2:
        return None
    mean = math.fsum(values) / len(values)
    variance = math.fsum((value - mean) ** 2 for value in values) / (len(values) - 1)
    return math.sqrt(variance) / math.sqrt(len(values))


def _median(values: Sequence[float]) -> Optional[float]:
    if not values:
        return None
    return float(np.median(np.asarray(values, dtype=float)))


def aggregate(stats: Sequence[TrialStats]) -> AggregateReport:
    if not stats:
        raise ValueError("aggregate needs at least one trial")
    sfr = [s.M / s.r for s in stats if s.r > 0]
    msl = [(s.M + s.F) / s.F for s in stats if s.F > 0]
    mpph = [s.r / s.T_hours for s in stats if s.T_hours > 0.0]
    recovered = [length for s in stats for length in s.recovered_runs]
    picked = sum(s.r for s in stats)
    objects = sum(s.n for s in stats)
    attempts = sum(s.attempts for s in stats)
    return AggregateReport(
        sfr_mean=_mean(sfr),
        sfr_se=_standard_error(sfr),
        msl_ratio=_mean(msl),
        msl_median=_median([length for length in recovered if length >= 2]),
        mpph_mean=_mean(mpph),
        mpph_se=_standard_error(mpph),
        posp=picked / objects if objects else None,
        n_trials_used=len(sfr),
        n_trials_excluded=len(stats) - len(sfr),
        recovery_len_median=_median([length + 1 for length in recovered]),
        reliability=picked / attempts if attempts else None,
    )
