from __future__ import annotations

import math
from random import Random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from korra.prob import RngStream, from_weighted
from korra.stats import (
    CategoryStat,
    FitRow,
    InteractionsStat,
    StatsError,
    compute_fit,
    suggest_weights,
)


class TestRecordExecution:
    def test_first_record(self):
        stats = InteractionsStat()
        stats.record_execution("A", 4.0)
        assert stats.per_category["A"].avg_time == 4.0

    def test_running_average(self):
        stats = InteractionsStat()
        stats.record_execution("A", 4.0)
        stats.record_execution("A", 6.0)
        assert stats.per_category["A"].avg_time == 5.0

    def test_zero_duration_counted(self):
        stats = InteractionsStat()
        stats.record_execution("A", 0.0)
        assert stats.per_category["A"].count == 1
        assert stats.per_category["A"].avg_time == 0.0

    def test_negative_duration_rejected(self):
        with pytest.raises(StatsError):
            InteractionsStat().record_execution("A", -1.0)

    def test_avg_without_records_raises(self):
        with pytest.raises(StatsError):
            _ = CategoryStat(name="A").avg_time


class TestComputeFit:
    def test_worked_example(self):
        rows = [FitRow(avg_time=4, pause=3.7, count=3), FitRow(avg_time=6, pause=3.7, count=2)]
        assert compute_fit(rows) == 42.5

    def test_zero_counts(self):
        rows = [FitRow(avg_time=4, pause=3.7, count=0), FitRow(avg_time=6, pause=3.7, count=0)]
        assert compute_fit(rows) == 0.0

    def test_single_category_no_pause(self):
        assert compute_fit([FitRow(avg_time=10, pause=0, count=5)]) == 50.0

    def test_matches_hand_evaluation_on_random_inputs(self):
        rng = Random(7)
        for _ in range(100):
            rows = [
                FitRow(
                    avg_time=rng.uniform(0.1, 30),
                    pause=rng.uniform(0, 10),
                    count=rng.randint(0, 20),
                )
                for _ in range(rng.randint(1, 8))
            ]
            expected = math.fsum((r.avg_time + r.pause) * r.count for r in rows)
            assert compute_fit(rows) == expected

    @given(
        st.lists(
            st.tuples(st.floats(0.1, 50), st.floats(0, 10), st.integers(0, 30)),
            min_size=1,
            max_size=6,
        ),
        st.floats(0.5, 3.0),
    )
    def test_linear_in_counts(self, rows, factor):
        base = [FitRow(a, p, c) for a, p, c in rows]
        tripled = [FitRow(a, p, 3 * c) for a, p, c in rows]
        assert compute_fit(tripled) == pytest.approx(3 * compute_fit(base), rel=1e-12)


class TestSuggestWeights:
    def _stats(self, avgs):
        stats = InteractionsStat()
        for name, avg in avgs.items():
            stats.record_execution(name, avg)
        return stats

    def test_equal_shares_equal_costs_give_uniform(self):
        stats = self._stats({"A": 5.0, "B": 5.0})
        weights = suggest_weights({"A": 0.5, "B": 0.5}, stats, pause_mean=2.0)
        assert weights["A"] == pytest.approx(0.5, abs=1e-12)

    def test_slower_category_gets_less_weight(self):
        # (A+P) of 10 vs 5 with equal desired shares: weights 1/3 and 2/3
        stats = self._stats({"A": 8.0, "B": 3.0})
        weights = suggest_weights({"A": 0.5, "B": 0.5}, stats, pause_mean=2.0)
        assert weights["A"] == pytest.approx(1 / 3, abs=1e-12)
        assert weights["B"] == pytest.approx(2 / 3, abs=1e-12)

    def test_single_category(self):
        stats = self._stats({"A": 4.0})
        assert suggest_weights({"A": 1.0}, stats, pause_mean=1.0) == {"A": 1.0}

    def test_missing_stats_named(self):
        stats = self._stats({"A": 4.0})
        with pytest.raises(StatsError, match="'B'"):
            suggest_weights({"A": 0.5, "B": 0.5}, stats, pause_mean=1.0)

    def test_shares_must_sum_to_one(self):
        stats = self._stats({"A": 4.0})
        with pytest.raises(StatsError):
            suggest_weights({"A": 0.7}, stats, pause_mean=1.0)

    def test_sampled_time_shares_match_desired(self):
        """Simulate sampling with the suggested weights and verify realized shares."""
        avgs = {"A": 9.0, "B": 2.5, "C": 5.0}
        desired = {"A": 0.2, "B": 0.5, "C": 0.3}
        pause = 3.7
        stats = self._stats(avgs)
        weights = suggest_weights(desired, stats, pause_mean=pause)
        dist = from_weighted(weights.items())
        rng = RngStream(123, "check")
        spent = {name: 0.0 for name in avgs}
        for _ in range(10_000):
            name = dist.sample(rng)
            spent[name] += avgs[name] + pause
        total = math.fsum(spent.values())
        for name, share in desired.items():
            assert abs(spent[name] / total - share) < 0.02


class TestPersistenceRoundTrip:
    def test_snapshot_and_restore(self):
        stats = InteractionsStat(default_duration=6.0)
        stats.record_execution("A", 4.0)
        stats.record_execution("A", 8.0)
        stats.record_depleted_request("B")
        again = InteractionsStat.from_snapshot(stats.snapshot())
        assert again.per_category["A"].avg_time == 6.0
        assert again.per_category["B"].depleted_requests == 1
        assert again.default_duration == 6.0

    def test_default_duration_fallback(self):
        stats = InteractionsStat(default_duration=4.5)
        assert stats.avg_or_default("never_seen") == 4.5
