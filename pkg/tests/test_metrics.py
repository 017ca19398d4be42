"""Tests for picking_core.metrics: failure counting, per-trial stats and batch aggregates."""

from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from picking_core.metrics import (
    TrialStats,
    aggregate,
    failure_runs,
    sequential_failure_counts,
    trial_stats,
)
from picking_core.model import Action, Termination, TimeModel, TrialLog, TrialRecord

rewards_strategy = st.lists(st.integers(0, 1), max_size=200)


def _oracle(rewards):
    """(M, F) from the run decomposition instead of adjacent-index counting."""
    runs = failure_runs(rewards)
    m = sum(length - 1 for length in runs)
    closed = runs[:-1] if rewards and rewards[-1] == 0 else runs
    f = sum(1 for length in closed if length >= 2)
    return m, f


def _log(rewards, per_attempt: float = 12.0, n_objects: int = 12) -> TrialLog:
    records = tuple(
        TrialRecord(Action(0, 0, 0, (0.0, 0.0)), reward, (k + 1) * per_attempt) for k, reward in enumerate(rewards)
    )
    return TrialLog(records, Termination.ALL_PICKED, n_objects, "markov", 0)


def _stats(M=0, F=0, r=0, n=12, T_hours=0.1, runs=(), attempts=1, ends_in_failure=False) -> TrialStats:
    return TrialStats(M, F, r, n, T_hours, tuple(runs), attempts, ends_in_failure)


# ---------------------------------------------------------------------------
# Sequential failure counting
# ---------------------------------------------------------------------------

class TestSequentialFailureCounts:
    @pytest.mark.parametrize(
        "rewards, expected",
        [
            ([0, 0, 0, 1], (2, 1)),
            ([1, 1, 1], (0, 0)),
            ([0, 1, 0, 0, 1], (1, 1)),
            ([0, 0], (1, 0)),
            ([], (0, 0)),
            ([0], (0, 0)),
        ],
    )
    def test_examples(self, rewards, expected):
        assert sequential_failure_counts(rewards) == expected

    def test_rejects_non_binary_rewards(self):
        with pytest.raises(ValueError):
            sequential_failure_counts([0, 2])

    def test_failure_runs_in_order(self):
        assert failure_runs([0, 0, 1, 0, 1, 1, 0, 0, 0]) == [2, 1, 3]

    @given(rewards_strategy)
    def test_matches_run_decomposition(self, rewards):
        assert sequential_failure_counts(rewards) == _oracle(rewards)

    def test_oracle_on_ten_thousand_sequences(self):
        rng = random.Random(2024)
        for _ in range(10_000):
            length = rng.randint(0, 200)
            bias = rng.random()
            rewards = [int(rng.random() < bias) for _ in range(length)]
            assert sequential_failure_counts(rewards) == _oracle(rewards)


# ---------------------------------------------------------------------------
# trial_stats
# ---------------------------------------------------------------------------

class TestTrialStats:
    def test_simulated_time_uses_last_record(self):
        stats = trial_stats(_log([1] * 12), TimeModel())
        assert stats.r == 12
        assert stats.T_hours == pytest.approx(144.0 / 3600.0)
        assert stats.attempts == 12

    def test_physical_mode_multiplies_attempts(self):
        stats = trial_stats(_log([0, 1, 1], per_attempt=5.0), TimeModel(mode="physical", t_pick_s=20.0))
        assert stats.T_hours == pytest.approx(60.0 / 3600.0)

    def test_empty_log(self):
        stats = trial_stats(_log([]), TimeModel())
        assert stats.T_hours == 0.0
        assert not stats.has_attempts
        assert stats.sequence_lengths == ()

    def test_run_bookkeeping(self):
        stats = trial_stats(_log([0, 0, 1, 0, 1, 0, 0]), TimeModel())
        assert (stats.M, stats.F) == (2, 1)
        assert stats.sequence_lengths == (2, 1, 2)
        assert stats.ends_in_failure
        assert stats.recovered_runs == (2, 1)


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------

class TestAggregate:
    def test_worked_example(self):
        stats = [
            _stats(M=2, F=1, r=4, T_hours=0.1, runs=(3,), attempts=7),
            _stats(M=0, F=0, r=12, T_hours=0.04, runs=(), attempts=12),
            _stats(M=19, F=0, r=0, T_hours=20 * 12 / 3600, runs=(20,), attempts=20, ends_in_failure=True),
        ]
        report = aggregate(stats)
        assert report.sfr_mean == pytest.approx((0.5 + 0.0) / 2)
        assert report.sfr_se == pytest.approx(np.std([0.5, 0.0], ddof=1) / np.sqrt(2))
        assert report.n_trials_used == 2
        assert report.n_trials_excluded == 1
        assert report.msl_ratio == pytest.approx(3.0)
        assert report.msl_median == 3.0
        assert report.recovery_len_median == 4.0
        assert report.posp == pytest.approx(16 / 36)
        assert report.reliability == pytest.approx(16 / 39)
        assert report.mpph_mean == pytest.approx((40.0 + 300.0 + 0.0) / 3)

    def test_undefined_statistics_are_none(self):
        report = aggregate([_stats(r=0, T_hours=0.0, attempts=0)])
        assert report.sfr_mean is None
        assert report.sfr_se is None
        assert report.msl_ratio is None
        assert report.msl_median is None
        assert report.mpph_mean is None
        assert report.posp == 0.0
        assert "n/a" in report.status_text()

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])

    def test_msl_ratio_at_least_two(self):
        report = aggregate([_stats(M=1, F=1, r=1, runs=(2,)), _stats(M=5, F=2, r=2, runs=(3, 4))])
        assert report.msl_ratio >= 2.0

    @given(
        st.lists(
            st.tuples(st.integers(0, 30), st.integers(0, 5), st.integers(0, 12), st.floats(0.001, 2.0)),
            min_size=1,
            max_size=30,
        ),
        st.randoms(),
    )
    def test_permutation_invariant(self, rows, rnd):
        stats = [_stats(M=m, F=f, r=r, T_hours=t, runs=(2,) * f) for m, f, r, t in rows]
        shuffled = list(stats)
        rnd.shuffle(shuffled)
        assert aggregate(stats) == aggregate(shuffled)

    def test_pooled_posp_is_weighted(self):
        first = [_stats(r=12), _stats(r=6)]
        second = [_stats(r=3, n=12)]
        pooled = aggregate(first + second).posp
        assert pooled == pytest.approx((18 + 3) / 36)
