"""The real-time loop: sample, tune, execute, time, trigger, resample.

One engine owns all mutable state (session, queue, clock, RNG streams) and
advances one interaction per step: pause, utterance, optional question with a
sampled timeout, reaction, trigger evaluation, queue top-up. A scripted or
synthetic user policy makes every behavior testable headless; the same loop
drives live sessions where answers arrive over HTTP.

Every subsystem draws from its own named RNG stream, so timing draws never
perturb content choices and a fixed seed plus a fixed response sequence
reproduces a session byte for byte.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

from .model import (
    AgentModel,
    Interaction,
    PredefinedResponse,
    map_response,
    reaction_for,
    strip_ssml,
)
from .prob import RngStream, from_weighted, histogram_text
from .scheduler import (
    InteractionsQueue,
    QueueItem,
    Scheduler,
    effective_distribution,
)
from .session import SessionLog, SessionState, FactAnswer, persist, startup
from .stats import InteractionsStat
from .timing import gate as draw_gate
from .timing import sample_interval
from .triggers import (
    DistributionEdit,
    FacialCue,
    InjectInteraction,
    ResampleRequest,
    TriggerEffect,
    apply_edits,
    response_effects,
    tick_effects,
)


class Clock(Protocol):
    def now(self) -> float: ...

    def advance_to(self, t: float) -> None: ...


class VirtualClock:
    """Time that advances only when told to.

    ``speed`` optionally paces the run against the wall clock (sleeping
    dt/speed); virtual timestamps are unaffected, so determinism never
    depends on it. Sub-5ms sleeps are skipped.
    """

    def __init__(self, speed: float | None = None):
        self._now = 0.0
        self.speed = speed

    def now(self) -> float:
        return self._now

    def advance_to(self, t: float) -> None:
        if t < self._now:
            raise ValueError("clock cannot move backwards")
        if self.speed and self.speed > 0:
            dt = (t - self._now) / self.speed
            if dt >= 0.005:
                time.sleep(dt)
        self._now = t


class WallClock:
    def __init__(self) -> None:
        self._base = time.monotonic()

    def now(self) -> float:
        return time.monotonic() - self._base

    def advance_to(self, t: float) -> None:
        remaining = t - self.now()
        if remaining > 0:
            time.sleep(remaining)


@dataclass(frozen=True)
class EngineEvent:
    at: float
    kind: str  # utterance | awaiting_response | nonverbal | queue_regenerated | session_end
    payload: Mapping

    def to_dict(self) -> dict:
        return {"at": self.at, "kind": self.kind, "payload": dict(self.payload)}


class UserPolicy(Protocol):
    def answer(
        self, interaction: Interaction, options: Sequence[str], rng: RngStream
    ) -> str | None: ...


class SilentPolicy:
    """Never answers; every question times out."""

    def answer(self, interaction, options, rng):
        return None


class AlwaysPositivePolicy:
    """Picks the first positive option; free-text questions get a canned name."""

    def __init__(self, free_text: str = "Alex"):
        self.free_text = free_text

    def answer(self, interaction, options, rng):
        if interaction.captures is not None and not options:
            return self.free_text
        for response in interaction.responses:
            if response.polarity == "positive":
                return response.label
        return options[0] if options else None

class UniformRandomPolicy:
    """Uniform choice over the offered options (or a canned free-text answer)."""

    def __init__(self, free_text: str = "Sam"):
        self.free_text = free_text

    def answer(self, interaction, options, rng):
        if interaction.captures is not None and not options:
            return self.free_text
        if not options:
            return None
        return rng.choice(list(options))


class ScriptedPolicy:
    """Replays a prerecorded list of answers, one entry per asked question.

    Entries are raw input strings or None for silence; an exhausted script
    stays silent.
    """

    def __init__(self, entries: Iterable[str | None]):
        self.entries = list(entries)
        self._index = 0

    def answer(self, interaction, options, rng):
        if self._index >= len(self.entries):
            return None
        entry = self.entries[self._index]
        self._index += 1
        return entry


POLICIES: dict[str, Callable[[], UserPolicy]] = {
    "silent": SilentPolicy,
    "always_positive": AlwaysPositivePolicy,
    "uniform_random": UniformRandomPolicy,
}


class ResponseSource(Protocol):
    """Waits for the user's answer to the question just asked."""

    def acquire(
        self, interaction: Interaction, options: Sequence[str], timeout: float
    ) -> str | None: ...


class PolicyResponseSource:
    """Synthesizes answers from a policy; answer delay is drawn from the user
    stream and the engine clock advances accordingly."""

    def __init__(self, engine: "Engine", policy: UserPolicy):
        self.engine = engine
        self.policy = policy

    def acquire(self, interaction, options, timeout):
        answer = self.policy.answer(interaction, options, self.engine.rng_user)
        if answer is None:
            self.engine.advance_by(timeout)
            return None
        fraction = self.engine.rng_delay.uniform(0.2, 0.8)
        self.engine.advance_by(min(timeout, fraction * timeout))
        return answer


@dataclass
class SimulationReport:
    interactions_executed: int = 0
    per_category: dict[str, int] = field(default_factory=dict)
    depletion_events: int = 0
    trigger_firings: int = 0
    peak_queue_length: int = 0
    questions_asked: int = 0
    questions_timed_out: int = 0
    virtual_duration: float = 0.0
    ended_early: bool = False


class Engine:
    """Owns one session end to end. Single-writer: nothing outside the engine
    mutates its state; callers interact through submitted responses and
    read-only snapshots."""

    def __init__(
        self,
        model: AgentModel,
        session: SessionState,
        *,
        seed: int,
        clock: Clock | None = None,
        policy: UserPolicy | None = None,
        response_source: ResponseSource | None = None,
        low_water: int = 3,
        batch: int = 9,
        queue_max: int = 32,
        timing_enabled: bool = True,
        nonverbals_enabled: bool | None = None,
    ) -> None:
        self.model = model
        self.session = session
        self.seed = seed
        self.clock: Clock = clock if clock is not None else VirtualClock()
        self.rng_content = RngStream(seed, "content")
        self.rng_timing = RngStream(seed, "timing")
        self.rng_gates = RngStream(seed, "gates")
        self.rng_user = RngStream(seed, "user-sim")
        # answer delays draw from their own stream so a replayed script (which
        # never consumes policy randomness) still lands on identical timestamps
        self.rng_delay = RngStream(seed, "user-delay")
        self.scheduler = Scheduler(model, session, self.rng_content, session.stats)
        self.queue = InteractionsQueue()
        self.low_water = low_water
        self.batch = batch
        self.queue_max = queue_max
        self.timing_enabled = timing_enabled
        self.nonverbals_enabled = (
            timing_enabled if nonverbals_enabled is None else nonverbals_enabled
        )
        self.log = SessionLog(
            header=[
                "korra session log",
                f"model {model.name} seed {seed}",
                f"started {datetime.now(timezone.utc).isoformat(timespec='seconds')}",
            ]
        )
        if response_source is not None:
            self.response_source: ResponseSource = response_source
        else:
            self.response_source = PolicyResponseSource(self, policy or SilentPolicy())
        self.subscribers: list[Callable[[EngineEvent], None]] = []
        self.started = False
        self.ended = False
        self.report = SimulationReport()
        self._step_events: list[EngineEvent] = []
        self._next_smile: float | None = None
        self._next_gaze: float | None = None
        self._gaze_away_until: float | None = None
        self._pending_question: Interaction | None = None

    # ------------------------------------------------------------------
    # time and events
    # ------------------------------------------------------------------

    def now(self) -> float:
        return self.clock.now()

    def _interval(self, kind: str) -> float:
        if not self.timing_enabled:
            return 0.0
        return sample_interval(kind, self.model.timing, self.rng_timing)

    def _emit(self, kind: str, payload: Mapping, at: float | None = None) -> EngineEvent:
        event = EngineEvent(at=self.now() if at is None else at, kind=kind, payload=payload)
        self._step_events.append(event)
        for subscriber in list(self.subscribers):
            subscriber(event)
        return event

    def advance_by(self, dt: float) -> None:
        self.advance_to(self.now() + dt)

    def advance_to(self, target: float) -> None:
        """Move time forward, emitting any nonverbal cues that fall due."""
        while True:
            upcoming = self._due_nonverbal_before(target)
            if upcoming is None:
                break
            at, cue = upcoming
            self.clock.advance_to(at)
            self._emit_nonverbal(cue, at)
        self.clock.advance_to(target)

    def flush_nonverbals(self) -> None:
        """Emit cues whose scheduled time has already passed (live waits)."""
        while True:
            upcoming = self._due_nonverbal_before(self.now())
            if upcoming is None:
                return
            at, cue = upcoming
            self._emit_nonverbal(cue, at)

    def _due_nonverbal_before(self, target: float) -> tuple[float, str] | None:
        if not self.nonverbals_enabled:
            return None
        candidates: list[tuple[float, str]] = []
        if self._next_smile is not None and self._next_smile <= target:
            candidates.append((self._next_smile, "smile"))
        if self._gaze_away_until is not None and self._gaze_away_until <= target:
            candidates.append((self._gaze_away_until, "gaze_return"))
        elif self._next_gaze is not None and self._next_gaze <= target:
            candidates.append((self._next_gaze, "gaze_away"))
        if not candidates:
            return None
        return min(candidates)

    def _emit_nonverbal(self, cue: str, at: float) -> None:
        if cue == "smile":
            self._next_smile = at + self._interval("smile")
        elif cue == "gaze_away":
            self._gaze_away_until = at + self.model.timing.gaze_return_after
            self._next_gaze = None
        elif cue == "gaze_return":
            self._gaze_away_until = None
            self._next_gaze = at + self._interval("gaze_hold")
        self.log.append(at, "nonverbal_cue", cue)
        self._emit("nonverbal", {"cue": cue}, at=at)

    # ------------------------------------------------------------------
    # queue bookkeeping
    # ------------------------------------------------------------------

    def _item_text(self, item: QueueItem) -> str:
        if item.is_placeholder:
            category = self.model.category(item.placeholder_category)
            return f"###place holder for {category.state_variable}"
        interaction = self.session.find_interaction(self.model, item.interaction_id)
        return interaction.text

    def queue_lines(self) -> list[str]:
        return [
            f"{i}. {self._item_text(item)}"
            for i, item in enumerate(self.queue.pending(), start=1)
        ]

    def _pending_category_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for item in self.queue.pending():
            if item.is_placeholder:
                category = item.placeholder_category
            else:
                category = self.session.find_interaction(self.model, item.interaction_id).category
            counts[category] = counts.get(category, 0) + 1
        return counts

    def fit_pending(self) -> float:
        """Forecast in seconds for executing everything still queued."""
        return self.session.stats.fit_for_counts(
            self._pending_category_counts(), self.model.timing.pause_new.mean
        )

    def _log_regeneration_blocks(self) -> None:
        at = self.now()
        base = self.scheduler.base_distribution()
        depleted = getattr(self.scheduler, "last_depleted", set())
        try:
            effective = effective_distribution(base, depleted)
            hist = histogram_text(from_weighted(effective.weights.items()))
        except Exception:
            hist = "(no categories available)"
        self.log.histogram_block(at, hist)
        self.log.queue_block(at, self.queue_lines())
        self.log.append(at, "note", f"FIT forecast for queued batch: {self.fit_pending():.1f}s")

    def _generate(self, n: int) -> None:
        before = self.session.stats.depleted_total()
        self.scheduler.last_depleted = set()
        produced_before = self.queue.pending_count()
        depleted_seen: set[str] = set()

        # wrap stats counting to also learn which categories came up short
        queue = self.queue
        target = min(n, self.queue_max - queue.pending_count())
        if target <= 0:
            return
        original_record = self.session.stats.record_depleted_request

        def counting_record(category: str) -> None:
            depleted_seen.add(category)
            original_record(category)

        self.session.stats.record_depleted_request = counting_record  # type: ignore[method-assign]
        try:
            self.scheduler.generate(target, queue=queue)
        finally:
            self.session.stats.record_depleted_request = original_record  # type: ignore[method-assign]
        self.scheduler.last_depleted = depleted_seen
        for category in sorted(depleted_seen):
            self.log.append(self.now(), "depletion", f"{category} unavailable while sampling")
            self.report.depletion_events += 1
        self.report.peak_queue_length = max(
            self.report.peak_queue_length, self.queue.pending_count()
        )

    def _top_up(self, reason: str) -> None:
        self._generate(self.batch)
        self._log_regeneration_blocks()
        self._emit(
            "queue_regenerated",
            {"reason": reason, "queue": self.queue_lines()},
        )

    def _resample_pending(self, reason: str) -> None:
        """Replace only the unexecuted suffix; the executed prefix is history."""
        self.queue.drop_pending()
        self.scheduler.reset_cursors()
        self._generate(self.batch)
        self.scheduler.apply_group_rules(self.queue)
        self._log_regeneration_blocks()
        self._emit("queue_regenerated", {"reason": reason, "queue": self.queue_lines()})

    # ------------------------------------------------------------------
    # lifecycle
    # ------------------------------------------------------------------

    def start(self) -> None:
        if self.started:
            return
        self.started = True
        self.log.append(0.0, "note", f"session start model={self.model.name} seed={self.seed}")
        for note in self.session.startup_notes:
            self.log.append(0.0, "note", note)
        self._generate(self.batch)
        self.scheduler.session_start_tuning(self.queue)
        self._log_regeneration_blocks()
        self._emit("queue_regenerated", {"reason": "session_start", "queue": self.queue_lines()})
        if self.nonverbals_enabled:
            self._next_smile = self.now() + self._interval("smile")
            self._next_gaze = self.now() + self._interval("gaze_hold")
        self._apply_trigger_effects(*tick_effects(
            self.model.triggers, now=self.now(), fired=self.session.fired_triggers
        ))

    def run_step(self) -> list[EngineEvent]:
        """Advance one interaction; returns the engine events it produced."""
        self._step_events = []
        if self.ended:
            return []
        if not self.started:
            self.start()
        if self.queue.exhausted():
            self._top_up("queue_empty")
            if self.queue.exhausted():
                self._end_session("content exhausted")
                return self._step_events

        step_start = self.now()
        self.advance_by(self._interval("pause_new"))

        item = self.queue.current()
        self.queue.advance()
        if item.is_placeholder:
            interaction = self.scheduler.fill_placeholder(item)
        else:
            interaction = self.session.find_interaction(self.model, item.interaction_id)

        self._execute_interaction(interaction)

        duration = self.now() - step_start
        self.session.stats.record_execution(interaction.category, duration)
        self.report.interactions_executed += 1
        self.report.per_category[interaction.category] = (
            self.report.per_category.get(interaction.category, 0) + 1
        )
        self.report.virtual_duration = self.now()

        self._apply_trigger_effects(*tick_effects(
            self.model.triggers, now=self.now(), fired=self.session.fired_triggers
        ))

        if self.queue.pending_count() < self.low_water:
            self._top_up("low_water")
            if self.queue.exhausted():
                self._end_session("content exhausted")
        return self._step_events

    def _end_session(self, reason: str) -> None:
        if not self.ended:
            self.ended = True
            self.log.append(self.now(), "note", f"session end: {reason}")
            self._emit("session_end", {"reason": reason})
            self.report.ended_early = True

    # ------------------------------------------------------------------
    # one interaction
    # ------------------------------------------------------------------

    def _utter(self, interaction: Interaction, raw: str) -> None:
        display = strip_ssml(raw)
        if self.session.user_name and draw_gate("address_by_name", self.model.gates, self.rng_gates):
            raw = f"{self.session.user_name}, {raw}"
            display = f"{self.session.user_name}, {display}"
        self.log.append(self.now(), "utterance", f"{interaction.category}/{interaction.id}: {raw}")
        self._emit(
            "utterance",
            {
                "interaction_id": interaction.id,
                "category": interaction.category,
                "kind": interaction.kind,
                "text": display,
                "raw": raw,
            },
        )

    def _execute_interaction(self, interaction: Interaction) -> None:
        text = self.scheduler.choose_variant(interaction)
        self._utter(interaction, text)
        answered = False
        if interaction.is_question:
            answered = self._run_question(interaction)
        self.session.mark_used(interaction.id, answered=answered, at=self.now())
        if interaction.kind == "joke":
            self._maybe_clarify_joke()

    def _run_question(self, interaction: Interaction, *, retry: bool = False) -> bool:
        options = [r.label for r in interaction.responses]
        timeout = self._interval("response_timeout")
        self.report.questions_asked += 1
        self._pending_question = interaction
        self._emit(
            "awaiting_response",
            {
                "interaction_id": interaction.id,
                "options": options,
                "free_text": interaction.captures is not None,
                "timeout_s": timeout,
            },
        )
        try:
            raw = self.response_source.acquire(interaction, options, timeout)
        finally:
            self._pending_question = None
        self.flush_nonverbals()
        if raw is None:
            self.report.questions_timed_out += 1
            label = "(abandoned)" if retry else "(no response)"
            self.log.append(self.now(), "response", f"{interaction.id}: {label}")
            return False
        matched = interaction.response_by_label(raw)
        if matched is None and interaction.captures is None:
            self.log.append(
                self.now(), "note", f'unparsed input "{raw}" for {interaction.id}'
            )
            if retry:
                self.log.append(self.now(), "response", f"{interaction.id}: (abandoned)")
                return False
            self._utter(interaction, self.scheduler.choose_variant(interaction))
            return self._run_question(interaction, retry=True)
        self._apply_answer(interaction, raw, matched)
        return True

    def _apply_answer(
        self, interaction: Interaction, raw: str, matched: PredefinedResponse | None
    ) -> None:
        at = self.now()
        if matched is None:
            # free-text capture
            self.log.append(at, "response", f'{interaction.id}: "{raw}"')
            self.session.user_facts[interaction.id] = FactAnswer(
                label=raw, polarity="positive", at=at
            )
            if interaction.captures == "user_name":
                self.session.user_name = raw.strip()
            polarity = "positive"
        else:
            detail = f'{interaction.id}: "{matched.label}" polarity={matched.polarity}'
            if matched.value is not None:
                detail += f" value={matched.value:g}"
            if matched.delta is not None:
                detail += f" delta={matched.delta:+g}"
            self.log.append(at, "response", detail)
            self.session.user_facts[interaction.id] = FactAnswer(
                label=matched.label, polarity=matched.polarity, at=at
            )
            polarity = matched.polarity
            if interaction.observes is not None:
                net_name, node_name = interaction.observes
                value = (
                    matched.observe_value
                    if matched.observe_value is not None
                    else matched.polarity == "positive"
                )
                self.session.record_observation(net_name, node_name, value)
            if interaction.variable is not None:
                old_var = self.session.variables[interaction.variable]
                new_var = map_response(old_var, matched)
                self.session.variables[interaction.variable] = new_var
                old_text = "unset" if old_var.value() is None else f"{old_var.value():g}"
                self.log.append(
                    self.now(),
                    "variable_change",
                    f"{interaction.variable}: {old_text} -> {new_var.current:g}",
                )
            reaction = reaction_for(interaction, matched)
            if reaction:
                self.advance_by(self._interval("pause_react"))
                self._utter(interaction, reaction)

        effects, fired, met_fired = response_effects(
            self.model.triggers,
            fact_id=interaction.id,
            polarity=polarity,
            nets=self._nets_with_variable_priors(),
            observations=self.session.observations,
            fired=self.session.fired_triggers,
            met_fired=self.session.met_fired,
        )
        self._apply_trigger_effects(effects, fired, met_fired, cause=f"response({interaction.id})")

    def _nets_with_variable_priors(self):
        """Network views where root priors follow their linked uncertain variables."""
        if not self.model.net_prior_vars:
            return self.model.nets
        from .bayes import BayesNet, BinaryNode

        out = dict(self.model.nets)
        for net_name, links in self.model.net_prior_vars.items():
            net = self.model.nets[net_name]
            nodes = []
            for node in net.nodes:
                if node.name in links:
                    value = self.session.variable_value(links[node.name])
                    if value is not None:
                        node = BinaryNode(name=node.name, parents=(), cpt={(): value})
                nodes.append(node)
            out[net_name] = BayesNet(nodes)
        return out

    def _maybe_clarify_joke(self) -> None:
        if not draw_gate("joke_clarify", self.model.gates, self.rng_gates):
            return
        clarifications = self.model.tuning.joke_clarifications
        if not clarifications:
            return
        if len(clarifications) == 1:
            text = clarifications[0]
        else:
            text = from_weighted((c, 1.0) for c in clarifications).sample(self.rng_gates)
        pseudo = Interaction(
            id="joke_clarification", category="MakeJoke", kind="statement", text=text
        )
        self.advance_by(self._interval("pause_react"))
        self.log.append(self.now(), "utterance", f"{pseudo.category}/{pseudo.id}: {text}")
        self._emit(
            "utterance",
            {
                "interaction_id": pseudo.id,
                "category": pseudo.category,
                "kind": pseudo.kind,
                "text": strip_ssml(text),
                "raw": text,
            },
        )

    # ------------------------------------------------------------------
    # trigger effects
    # ------------------------------------------------------------------

    def _apply_trigger_effects(
        self,
        effects: Sequence[TriggerEffect],
        fired: Sequence[str],
        met_fired: Sequence[str] = (),
        cause: str = "tick",
    ) -> None:
        if not effects:
            return
        self.session.fired_triggers.update(fired)
        self.session.met_fired.update(met_fired)
        for effect in effects:
            if isinstance(effect, DistributionEdit):
                summary = ", ".join(
                    (
                        f"{edit.category}*={edit.multiply:g}"
                        if edit.multiply is not None
                        else f"{edit.category}:={edit.set_to:g}"
                    )
                    for edit in effect.edits
                )
                self.log.append(
                    self.now(), "trigger_fired", f"{effect.trigger_id} cause={cause} edits[{summary}]"
                )
                self.report.trigger_firings += 1
            elif isinstance(effect, InjectInteraction):
                self.log.append(
                    self.now(),
                    "trigger_fired",
                    f"{effect.trigger_id} cause={cause} inject score={effect.score:.4f}",
                )
                self.report.trigger_firings += 1
        self.session.category_weights = apply_edits(self.session.category_weights, effects)
        resample = False
        for effect in effects:
            if isinstance(effect, InjectInteraction):
                template = Interaction(
                    id=f"injected_{effect.trigger_id}",
                    category=effect.spec.category,
                    kind=effect.spec.kind,
                    text=effect.spec.text,
                )
                concrete = self.session.register_injected(template)
                self.queue.insert_at_cursor(QueueItem(interaction_id=concrete.id))
                self.log.append(
                    self.now(), "note", f"injected {concrete.id} at queue head"
                )
            elif isinstance(effect, FacialCue):
                self.log.append(self.now(), "nonverbal_cue", f"{effect.cue}_face")
                self._emit("nonverbal", {"cue": f"{effect.cue}_face"})
            elif isinstance(effect, ResampleRequest):
                resample = True
        if resample:
            self._resample_pending(reason="trigger_resample")

    # ------------------------------------------------------------------
    # snapshots
    # ------------------------------------------------------------------

    def snapshot(self) -> dict:
        """A consistent view of engine state for APIs and debug panels."""
        base = self.scheduler.base_distribution()
        depleted = getattr(self.scheduler, "last_depleted", set())
        try:
            effective = effective_distribution(base, depleted)
            weights = {k: v for k, v in effective.weights.items() if v > 0}
            hist = histogram_text(from_weighted(effective.weights.items()))
        except Exception:
            weights, hist = {}, ""
        pending = self._pending_question
        return {
            "at": self.now(),
            "model": self.model.name,
            "seed": self.seed,
            "main_distribution": weights,
            "histogram_text": hist,
            "queue": self.queue_lines(),
            "variables": {
                name: variable.value()
                for name, variable in self.session.variables.items()
            },
            "user_name": self.session.user_name,
            "stats": self.session.stats.snapshot(),
            "fit_pending_s": self.fit_pending(),
            "pending_question": (
                {
                    "interaction_id": pending.id,
                    "text": strip_ssml(pending.text),
                    "options": [r.label for r in pending.responses],
                    "free_text": pending.captures is not None,
                }
                if pending is not None
                else None
            ),
            "ended": self.ended,
        }


# ----------------------------------------------------------------------
# headless simulation
# ----------------------------------------------------------------------


def simulate(
    model: AgentModel,
    policy: UserPolicy | str,
    duration_s: float,
    seed: int,
    speed: float = 1.0,
    *,
    store: Path | str | None = None,
    timing_enabled: bool = True,
    max_steps: int | None = None,
) -> tuple[SessionLog, SimulationReport]:
    """Run a headless session against a synthetic user on a virtual clock.

    ``speed`` scales wall-clock pacing only (1/speed of real time); virtual
    timestamps and all sampled behavior are identical at any speed.
    """
    if speed < 1:
        raise ValueError("speed must be >= 1")
    if isinstance(policy, str):
        try:
            policy = POLICIES[policy]()
        except KeyError:
            raise ValueError(f"unknown policy {policy!r}") from None
    session = startup(model, store, seed=seed)
    clock = VirtualClock(speed=None if speed >= 1000 else speed)
    engine = Engine(
        model,
        session,
        seed=seed,
        clock=clock,
        policy=policy,
        timing_enabled=timing_enabled,
    )
    steps = 0
    while not engine.ended and engine.now() < duration_s:
        engine.run_step()
        steps += 1
        if max_steps is not None and steps >= max_steps:
            break
    engine.report.virtual_duration = engine.now()
    if store is not None:
        persist(session, store)
    return engine.log, engine.report


# ----------------------------------------------------------------------
# log replay
# ----------------------------------------------------------------------

_UTTERANCE_RE = re.compile(r"^\[\s*[\d.]+\] utterance (?P<cat>[^/]+)/(?P<id>\S+): ")
_RESPONSE_RE = re.compile(r"^\[\s*[\d.]+\] response (?P<id>\S+): (?P<rest>.*)$")
_UNPARSED_RE = re.compile(r'^\[\s*[\d.]+\] note unparsed input "(?P<raw>.*)" for (?P<id>\S+)$')


def build_replay_policy(log_body: str, model: AgentModel) -> ScriptedPolicy:
    """Reconstruct the user's input sequence from a session log body.

    Feeding the result back into a fresh engine with the same seed reproduces
    the logged session byte for byte.
    """
    entries: list[str | None] = []
    unparsed_since_ask = 0
    for line in log_body.splitlines():
        unparsed = _UNPARSED_RE.match(line)
        if unparsed:
            # each unparsed input was one acquire; the engine re-asks once
            entries.append(unparsed.group("raw"))
            unparsed_since_ask += 1
            continue
        response = _RESPONSE_RE.match(line)
        if response:
            rest = response.group("rest")
            if rest.startswith("(no response)"):
                entries.append(None)
            elif rest.startswith("(abandoned)"):
                # abandoned after one unparsed try means the retry stayed silent;
                # after two unparsed tries both inputs are already recorded
                if unparsed_since_ask < 2:
                    entries.append(None)
            else:
                label = rest.split('"')[1] if '"' in rest else rest
                entries.append(label)
            unparsed_since_ask = 0
    return ScriptedPolicy(entries)
