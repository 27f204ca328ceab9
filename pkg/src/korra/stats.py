"""Execution-time accounting per category, depletion counters, the forecast of
how long a generated batch will take, and weight suggestions from desired time
shares.

The agent has to run at least once before the numbers mean anything; until
then a model-declared default duration stands in for unseen categories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping


class StatsError(ValueError):
    pass


@dataclass
class CategoryStat:
    name: str
    total_time: float = 0.0
    count: int = 0
    depleted_requests: int = 0

    @property
    def avg_time(self) -> float:
        if self.count == 0:
            raise StatsError(f"no executions recorded for {self.name!r}")
        return self.total_time / self.count


@dataclass(frozen=True)
class FitRow:
    """One category's inputs to the forecast: average duration, pause, count."""

    avg_time: float
    pause: float
    count: int


def compute_fit(rows: Iterable[FitRow]) -> float:
    """Forecasted interaction time for a batch: sum of (avg + pause) * count."""
    return math.fsum((row.avg_time + row.pause) * row.count for row in rows)


class InteractionsStat:
    """Mutable per-session (and persisted across sessions) execution statistics."""

    def __init__(self, default_duration: float = 5.0) -> None:
        if default_duration <= 0:
            raise StatsError(f"default duration must be positive, got {default_duration}")
        self.default_duration = default_duration
        self.per_category: dict[str, CategoryStat] = {}

    def _stat(self, category: str) -> CategoryStat:
        if category not in self.per_category:
            self.per_category[category] = CategoryStat(name=category)
        return self.per_category[category]

    def record_execution(self, category: str, duration: float) -> None:
        if duration < 0:
            raise StatsError(f"duration must be nonnegative, got {duration}")
        stat = self._stat(category)
        stat.total_time += duration
        stat.count += 1

    def record_depleted_request(self, category: str) -> None:
        self._stat(category).depleted_requests += 1

    def avg_or_default(self, category: str) -> float:
        stat = self.per_category.get(category)
        if stat is None or stat.count == 0:
            return self.default_duration
        return stat.avg_time

    def depleted_total(self) -> int:
        return sum(s.depleted_requests for s in self.per_category.values())

    def fit_for_counts(self, counts: Mapping[str, int], pause_mean: float) -> float:
        """Forecast for a concrete batch of per-category counts."""
        return compute_fit(
            FitRow(avg_time=self.avg_or_default(name), pause=pause_mean, count=count)
            for name, count in counts.items()
        )

    def snapshot(self) -> dict:
        return {
            "default_duration": self.default_duration,
            "categories": {
                name: {
                    "total_time": stat.total_time,
                    "count": stat.count,
                    "depleted_requests": stat.depleted_requests,
                }
                for name, stat in self.per_category.items()
            },
        }

    @classmethod
    def from_snapshot(cls, doc: Mapping) -> "InteractionsStat":
        stats = cls(default_duration=float(doc.get("default_duration", 5.0)))
        for name, entry in doc.get("categories", {}).items():
            stats.per_category[name] = CategoryStat(
                name=name,
                total_time=float(entry["total_time"]),
                count=int(entry["count"]),
                depleted_requests=int(entry["depleted_requests"]),
            )
        return stats


def suggest_weights(
    desired_time_share: Mapping[str, float],
    stats: InteractionsStat,
    pause_mean: float,
    *,
    require_observations: bool = True,
) -> dict[str, float]:
    """Category weights whose expected time shares match the desired shares.

    Sampling a category costs (avg duration + pause) seconds on average, so a
    weight proportional to share / (avg + pause) makes the realized time share
    equal the requested one. Advisory only: never auto-applied.
    """
    total_share = math.fsum(desired_time_share.values())
    if abs(total_share - 1.0) > 1e-9:
        raise StatsError(f"desired shares must sum to 1, got {total_share!r}")
    raw: dict[str, float] = {}
    for name, share in desired_time_share.items():
        if share < 0:
            raise StatsError(f"negative share for {name!r}")
        stat = stats.per_category.get(name)
        if require_observations and (stat is None or stat.count == 0):
            raise StatsError(f"no execution statistics for category {name!r}")
        raw[name] = share / (stats.avg_or_default(name) + pause_mean)
    total = math.fsum(raw.values())
    return {name: w / total for name, w in raw.items()}
