"""Builds the effective category distribution, samples the interactions queue,
selects within categories and applies tuning edits.

Two rules shape the effective distribution when categories run dry:
categories marked fixed keep their configured probability exactly, and the
leftover mass is shared among the remaining categories in proportion to their
weights. Within a category, selection first walks a seeded random permutation
(so every item appears once before any repeat) and then switches to uniform
draws that never emit the same item twice in a row.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable, Iterable, Mapping, Sequence

from .model import AgentModel, Category, Interaction, ModelError
from .prob import PROB_TOLERANCE, FiniteDist, RngStream, from_weighted

if TYPE_CHECKING:  # pragma: no cover
    from .session import SessionState
    from .stats import InteractionsStat

logger = logging.getLogger(__name__)


class DepletionError(RuntimeError):
    """Every category is out of eligible interactions."""


class CategoryDepleted(RuntimeError):
    """One category has no eligible interaction for the requested draw."""


class TuningError(ValueError):
    """A tuning command touched the executed prefix or referenced bad items."""


@dataclass(frozen=True)
class MainDistribution:
    """Category weights plus the set of categories whose weight is pinned.

    Raw (editable) weight maps need not sum to 1; the output of
    effective_distribution always does.
    """

    weights: Mapping[str, float]
    fixed: frozenset[str] = frozenset()

    def total(self) -> float:
        return math.fsum(self.weights.values())

    def as_dist(self) -> FiniteDist[str]:
        return from_weighted(self.weights.items())


def effective_distribution(
    base: MainDistribution, depleted: Iterable[str] = ()
) -> MainDistribution:
    """Remove depleted categories while preserving fixed probabilities.

    Fixed, non-depleted categories keep their base weight exactly; the mass
    left over (1 - sum of fixed) is split over the other surviving categories
    in proportion to their base weights.
    """
    depleted = set(depleted)
    live = {name: w for name, w in base.weights.items() if name not in depleted}
    if not live:
        raise DepletionError("all categories are depleted")

    untouched = not depleted or depleted.isdisjoint(base.weights)
    if untouched and abs(math.fsum(live.values()) - 1.0) <= PROB_TOLERANCE:
        return MainDistribution(weights=dict(live), fixed=base.fixed)

    fixed_live = {n: w for n, w in live.items() if n in base.fixed}
    free_live = {n: w for n, w in live.items() if n not in base.fixed}
    fixed_sum = math.fsum(fixed_live.values())

    out: dict[str, float] = {}
    if fixed_sum > 1.0 + PROB_TOLERANCE:
        logger.warning(
            "fixed categories sum to %.6f > 1 after depletion; scaling them down", fixed_sum
        )
        for name, w in fixed_live.items():
            out[name] = w / fixed_sum
        for name in free_live:
            out[name] = 0.0
        return MainDistribution(weights=out, fixed=base.fixed)

    remaining = 1.0 - fixed_sum
    out.update(fixed_live)
    if free_live:
        free_sum = math.fsum(free_live.values())
        if free_sum <= 0.0:
            share = remaining / len(free_live)
            for name in free_live:
                out[name] = share
        else:
            scale = remaining / free_sum
            for name, w in free_live.items():
                out[name] = w * scale
    elif remaining > PROB_TOLERANCE:
        # Only fixed categories survive and they undershoot 1: spread the rest.
        logger.warning(
            "only fixed categories remain (mass %.6f); spreading residual uniformly", fixed_sum
        )
        share = remaining / len(fixed_live)
        for name in fixed_live:
            out[name] = out[name] + share
    return MainDistribution(weights=out, fixed=base.fixed)


def reuse_probability(elapsed: float, tau: float) -> float:
    """Chance that an already-used interaction may be used again.

    Saturating exponential: 0 immediately after use, approaching 1 as the user
    is assumed to have forgotten it. ``tau`` is the time scale in seconds.
    """
    if elapsed < 0:
        raise ValueError(f"elapsed must be nonnegative, got {elapsed}")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if math.isinf(tau):
        return 0.0
    return 1.0 - math.exp(-elapsed / tau)


@dataclass
class CategoryCursor:
    """Per-category selection state: permutation walk, then uniform draws."""

    category: str
    phase: str = "permutation"  # "permutation" | "uniform"
    remaining: list[str] = field(default_factory=list)
    seen: set[str] = field(default_factory=set)
    last_emitted: str | None = None


def select_within_category(
    cursor: CategoryCursor,
    eligible_new: Sequence[str],
    eligible_repeat: Sequence[str],
    rng: RngStream,
    weights: Mapping[str, float] | None = None,
) -> str:
    """Pick the next interaction id for one category.

    ``eligible_new`` are items that may still be shown for the first time;
    ``eligible_repeat`` are items allowed to repeat. In the permutation phase
    each new item is emitted exactly once (seeded shuffle); once no new items
    remain the cursor switches to uniform draws over the repeatable pool,
    never emitting the same id twice in a row while at least two are eligible.
    Optional per-item weights softly bias the uniform phase (never the
    permutation, which must stay a fair cover of all items).

    Raises CategoryDepleted when neither pool offers anything.
    """
    if cursor.phase == "permutation":
        if not cursor.remaining:
            fresh = [i for i in eligible_new if i not in cursor.seen]
            if fresh:
                rng.shuffle(fresh)
                cursor.remaining = fresh
            elif eligible_repeat:
                cursor.phase = "uniform"
            else:
                raise CategoryDepleted(cursor.category)
        if cursor.phase == "permutation":
            pick = cursor.remaining.pop(0)
            cursor.seen.add(pick)
            cursor.last_emitted = pick
            return pick

    pool = [i for i in eligible_repeat]
    if not pool:
        raise CategoryDepleted(cursor.category)
    if len(pool) >= 2 and cursor.last_emitted in pool:
        pool = [i for i in pool if i != cursor.last_emitted]
    if len(pool) == 1:
        pick = pool[0]
    elif weights and any(weights.get(i, 1.0) != 1.0 for i in pool):
        pick = from_weighted((i, weights.get(i, 1.0)) for i in pool).sample(rng)
    else:
        pick = rng.choice(pool)
    cursor.seen.add(pick)
    cursor.last_emitted = pick
    return pick


@dataclass(frozen=True)
class QueueItem:
    """Either a concrete interaction or a placeholder to be filled at execution."""

    interaction_id: str | None = None
    placeholder_category: str | None = None

    def __post_init__(self) -> None:
        if (self.interaction_id is None) == (self.placeholder_category is None):
            raise ValueError("queue item is either an interaction or a placeholder")

    @property
    def is_placeholder(self) -> bool:
        return self.placeholder_category is not None


class InteractionsQueue:
    """Buffered upcoming interactions; the executed prefix is immutable."""

    def __init__(self) -> None:
        self._items: list[QueueItem] = []
        self.cursor = 0
        self.executed_total = 0
        self.peak_pending = 0

    @property
    def items(self) -> tuple[QueueItem, ...]:
        return tuple(self._items)

    def pending(self) -> list[QueueItem]:
        return self._items[self.cursor :]

    def pending_count(self) -> int:
        return len(self._items) - self.cursor

    def exhausted(self) -> bool:
        return self.cursor >= len(self._items)

    def current(self) -> QueueItem:
        if self.exhausted():
            raise IndexError("queue exhausted")
        return self._items[self.cursor]

    def advance(self) -> None:
        self.cursor += 1
        self.executed_total += 1
        # keep a short executed tail for inspection; memory stays bounded
        if self.cursor > 64:
            drop = self.cursor - 64
            del self._items[:drop]
            self.cursor -= drop

    def extend(self, items: Iterable[QueueItem]) -> None:
        self._items.extend(items)
        self.peak_pending = max(self.peak_pending, self.pending_count())

    def insert_at_cursor(self, item: QueueItem) -> None:
        self._items.insert(self.cursor, item)
        self.peak_pending = max(self.peak_pending, self.pending_count())

    def drop_pending(self) -> list[QueueItem]:
        """Remove and return the unexecuted suffix (for trigger resampling)."""
        dropped = self._items[self.cursor :]
        del self._items[self.cursor :]
        return dropped

    def pending_ids(self) -> set[str]:
        return {
            item.interaction_id
            for item in self._items[self.cursor :]
            if item.interaction_id is not None
        }


@dataclass(frozen=True)
class Prepend:
    interaction_id: str


@dataclass(frozen=True)
class Remove:
    predicate: Callable[[QueueItem], bool]


@dataclass(frozen=True)
class Group:
    ids: tuple[str, ...]


TuningCommand = Prepend | Remove | Group


def apply_tuning(queue: InteractionsQueue, commands: Sequence[TuningCommand]) -> None:
    """Apply prepend/remove/group commands to the unexecuted part of the queue."""
    for command in commands:
        if isinstance(command, Prepend):
            queue.insert_at_cursor(QueueItem(interaction_id=command.interaction_id))
        elif isinstance(command, Remove):
            kept = [item for item in queue.pending() if not command.predicate(item)]
            del queue._items[queue.cursor :]
            queue._items.extend(kept)
        elif isinstance(command, Group):
            _group_items(queue, command.ids)
        else:  # pragma: no cover
            raise TuningError(f"unknown tuning command {command!r}")


def _group_items(queue: InteractionsQueue, ids: tuple[str, ...]) -> None:
    pending = queue.pending()
    positions = [
        i for i, item in enumerate(pending) if item.interaction_id in set(ids)
    ]
    if len(positions) < 2:
        return
    anchor = positions[0]
    members = {pending[i].interaction_id: pending[i] for i in positions}
    rest = [item for i, item in enumerate(pending) if i not in positions]
    grouped = [members[i] for i in ids if i in members]
    new_pending = rest[:anchor] + grouped + rest[anchor:]
    del queue._items[queue.cursor :]
    queue._items.extend(new_pending)


class Scheduler:
    """Drives queue generation for one session.

    Owns the per-category cursors and the content RNG stream; reads usage and
    weight state from the session and reports depleted draws to the stats
    collector.
    """

    def __init__(
        self,
        model: AgentModel,
        session: "SessionState",
        rng: RngStream,
        stats: "InteractionsStat | None" = None,
    ) -> None:
        self.model = model
        self.session = session
        self.rng = rng
        self.stats = stats
        self.cursors: dict[str, CategoryCursor] = {}
        self.notices: list[str] = []

    def reset_cursors(self) -> None:
        """Forget selection state; used when the pending suffix is regenerated."""
        self.cursors.clear()

    def cursor(self, category: str) -> CategoryCursor:
        if category not in self.cursors:
            self.cursors[category] = CategoryCursor(category=category)
        return self.cursors[category]

    def base_distribution(self) -> MainDistribution:
        return MainDistribution(
            weights=dict(self.session.category_weights),
            fixed=self.model.fixed_categories(),
        )

    def _eligible(self, category: Category, pending: set[str]) -> tuple[list[str], list[str]]:
        new_pool: list[str] = []
        repeat_pool: list[str] = []
        for interaction_id in category.interactions:
            interaction = self.model.interactions[interaction_id]
            used = self.session.usage_of(interaction_id).used
            if interaction.repeatable:
                repeat_pool.append(interaction_id)
                if not used and interaction_id not in pending:
                    new_pool.append(interaction_id)
            elif not used and interaction_id not in pending:
                new_pool.append(interaction_id)
        return new_pool, repeat_pool

    def _select(self, category: Category, pending: set[str]) -> QueueItem:
        if category.placeholder:
            return QueueItem(placeholder_category=category.name)
        new_pool, repeat_pool = self._eligible(category, pending)
        cursor = self.cursor(category.name)
        weights = {
            i: self.model.interactions[i].weight
            for i in category.interactions
            if self.model.interactions[i].weight != 1.0
        }
        if category.selection == "uniform_no_immediate_repeat":
            cursor.phase = "uniform"
            pool = list(dict.fromkeys(new_pool + repeat_pool))
            picked = select_within_category(cursor, [], pool, self.rng, weights)
        else:
            picked = select_within_category(cursor, new_pool, repeat_pool, self.rng, weights)
        return QueueItem(interaction_id=picked)

    def generate(self, n: int, queue: InteractionsQueue | None = None) -> InteractionsQueue:
        """Append up to n sampled items to the queue (creating it if needed).

        A draw that lands on a category with nothing eligible counts as a
        depleted request, removes the category from the working distribution
        and is retried; if everything is depleted the queue comes back short
        with a logged notice.
        """
        if n < 1:
            raise ValueError("queue generation needs n >= 1")
        queue = queue if queue is not None else InteractionsQueue()
        pending = queue.pending_ids()
        depleted: set[str] = set()
        produced = 0
        while produced < n:
            try:
                dist = effective_distribution(self.base_distribution(), depleted)
            except DepletionError:
                self._notice(f"content exhausted after {produced} of {n} items")
                break
            category_name = dist.as_dist().sample(self.rng)
            category = self.model.category(category_name)
            try:
                item = self._select(category, pending)
            except CategoryDepleted:
                if self.stats is not None:
                    self.stats.record_depleted_request(category_name)
                depleted.add(category_name)
                continue
            queue.extend([item])
            if item.interaction_id is not None:
                pending.add(item.interaction_id)
            produced += 1
        return queue

    def session_start_tuning(self, queue: InteractionsQueue) -> None:
        """Prepend the greeting and apply grouping rules, removing duplicates."""
        commands: list[TuningCommand] = []
        for greet_id in reversed(self.model.tuning.greet_with):
            self.model.interaction(greet_id)  # validate
            commands.append(Remove(predicate=lambda it, g=greet_id: it.interaction_id == g))
            commands.append(Prepend(interaction_id=greet_id))
        apply_tuning(queue, commands)
        self.apply_group_rules(queue)

    def apply_group_rules(self, queue: InteractionsQueue) -> None:
        for group in self.model.tuning.group:
            apply_tuning(queue, [Group(ids=tuple(group))])

    def fill_placeholder(self, item: QueueItem) -> Interaction:
        """Choose the concrete state expression for a placeholder at execution time.

        The category's state variable picks the positive/negative wing at the
        0.5 midpoint; a never-asked variable falls back to a neutral variant.
        """
        if not item.is_placeholder:
            raise ModelError("fill_placeholder expects a placeholder item")
        category = self.model.category(item.placeholder_category)
        value = self.session.variable_value(category.state_variable)
        if value is None:
            wanted = "neutral"
        elif value >= 0.5:
            wanted = "positive"
        else:
            wanted = "negative"
        candidates = [
            self.model.interactions[i]
            for i in category.interactions
            if self.model.interactions[i].state == wanted
        ]
        if not candidates:
            candidates = [
                self.model.interactions[i]
                for i in category.interactions
                if self.model.interactions[i].state == "neutral"
            ]
        if not candidates:
            candidates = [self.model.interactions[i] for i in category.interactions]
        if not candidates:
            raise CategoryDepleted(category.name)
        if len(candidates) == 1:
            return candidates[0]
        cursor = self.cursor(f"{category.name}/fill")
        cursor.phase = "uniform"
        picked = select_within_category(cursor, [], [c.id for c in candidates], self.rng)
        return self.model.interactions[picked]

    def choose_variant(self, interaction: Interaction) -> str:
        """Pick the utterance text, honoring optional per-variant weights."""
        if not interaction.variants:
            return interaction.text
        if len(interaction.variants) == 1:
            return interaction.variants[0][0]
        dist = from_weighted((text, w) for text, w in interaction.variants)
        return dist.sample(self.rng)

    def _notice(self, message: str) -> None:
        self.notices.append(message)
        logger.info("%s", message)
