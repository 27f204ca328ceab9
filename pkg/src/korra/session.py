"""Session lifecycle: restoring what is known about the user, the startup
forgetfulness pass, persistence, and the append-only structured log that
doubles as the test oracle surface.

On startup the engine loads the model, restores every fact and used flag
collected in earlier sessions, then probabilistically un-marks old used
interactions so they may come up again (the longer ago an interaction was
used, the likelier the user has forgotten it).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .model import AgentModel, Interaction, UncertainVariable
from .prob import RngStream
from .scheduler import reuse_probability
from .stats import InteractionsStat

LOG_EVENT_KINDS = (
    "histogram",
    "queue_snapshot",
    "utterance",
    "response",
    "trigger_fired",
    "depletion",
    "variable_change",
    "nonverbal_cue",
    "note",
)


class StoreError(RuntimeError):
    """Session store unreadable; start fresh or restore a backup."""


class LogError(ValueError):
    pass


@dataclass
class InteractionUsage:
    used: bool = False
    answered: bool = False
    last_used_at: float | None = None  # wall-clock epoch seconds

    def mark(self, answered: bool, at_wall: float) -> None:
        self.used = True
        self.answered = answered
        self.last_used_at = at_wall

    def reset(self) -> None:
        self.used = False
        self.answered = False


@dataclass(frozen=True)
class FactAnswer:
    label: str
    polarity: str
    at: float  # seconds since session start


@dataclass
class SessionState:
    """Everything mutable about one user's relationship with one model."""

    model_name: str
    seed: int
    usage: dict[str, InteractionUsage] = field(default_factory=dict)
    variables: dict[str, UncertainVariable] = field(default_factory=dict)
    user_facts: dict[str, FactAnswer] = field(default_factory=dict)
    observations: dict[str, dict[str, bool]] = field(default_factory=dict)
    category_weights: dict[str, float] = field(default_factory=dict)
    stats: InteractionsStat = field(default_factory=InteractionsStat)
    user_name: str | None = None
    wall_started_at: float = field(default_factory=time.time)
    # per-session only: trigger bookkeeping and injected interactions
    fired_triggers: set[str] = field(default_factory=set)
    met_fired: set[str] = field(default_factory=set)
    injected: dict[str, Interaction] = field(default_factory=dict)
    injected_count: int = 0
    startup_notes: list[str] = field(default_factory=list)

    def usage_of(self, interaction_id: str) -> InteractionUsage:
        if interaction_id not in self.usage:
            self.usage[interaction_id] = InteractionUsage()
        return self.usage[interaction_id]

    def variable_value(self, name: str | None) -> float | None:
        if name is None:
            return None
        variable = self.variables.get(name)
        return variable.value() if variable else None

    def mark_used(self, interaction_id: str, answered: bool, at: float) -> None:
        """Flag an interaction as executed; non-repeatable ones leave the pool."""
        usage = self.usage_of(interaction_id)
        usage.mark(answered=answered, at_wall=self.wall_started_at + at)

    def record_observation(self, net: str, node: str, value: bool) -> None:
        self.observations.setdefault(net, {})[node] = value

    def register_injected(self, interaction: Interaction) -> Interaction:
        self.injected_count += 1
        injected_id = f"{interaction.id}__{self.injected_count}"
        concrete = Interaction(
            id=injected_id,
            category=interaction.category,
            kind=interaction.kind,
            text=interaction.text,
        )
        self.injected[injected_id] = concrete
        return concrete

    def find_interaction(self, model: AgentModel, interaction_id: str) -> Interaction:
        if interaction_id in self.injected:
            return self.injected[interaction_id]
        return model.interaction(interaction_id)


def fresh_session(model: AgentModel, seed: int) -> SessionState:
    state = SessionState(model_name=model.name, seed=seed)
    state.variables = dict(model.variables)
    state.category_weights = model.base_weights()
    state.stats = InteractionsStat(default_duration=model.tuning.default_duration)
    return state


def startup(
    model: AgentModel,
    store: Path | str | None,
    *,
    seed: int,
    now: float | None = None,
    forget_rng: RngStream | None = None,
) -> SessionState:
    """Load prior state (if any), then apply the forgetfulness policy.

    Each used non-repeatable interaction is reset with probability
    reuse_probability(now - last_used_at, tau). Repeatable interactions are
    always available again, so they are excluded from the pass.
    """
    state = fresh_session(model, seed)
    if store is not None:
        path = Path(store)
        if path.exists():
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise StoreError(
                    f"session store {path} is unreadable ({exc}); "
                    "delete or move it to start fresh"
                ) from exc
            _restore(state, model, doc)
    now = time.time() if now is None else now
    rng = forget_rng if forget_rng is not None else RngStream(seed, "forget")
    tau = model.tuning.reuse_tau
    used_before = sum(1 for u in state.usage.values() if u.used)
    reset_count = 0
    for interaction_id, interaction in model.interactions.items():
        if interaction.repeatable:
            continue
        usage = state.usage.get(interaction_id)
        if usage is None or not usage.used or usage.last_used_at is None:
            continue
        elapsed = max(0.0, now - usage.last_used_at)
        if rng.random() < reuse_probability(elapsed, tau):
            usage.reset()
            reset_count += 1
    state.wall_started_at = now
    state.startup_notes = [
        f"restored {len(state.user_facts)} facts, {used_before} used interactions",
        f"forgetfulness reset {reset_count} interactions",
    ]
    return state


def persist(state: SessionState, store: Path | str) -> None:
    """Write the session store; startup after persist restores identical state
    (modulo the fresh forgetfulness pass)."""
    path = Path(store)
    doc = {
        "model_name": state.model_name,
        "user_name": state.user_name,
        "usage": {
            interaction_id: {
                "used": usage.used,
                "answered": usage.answered,
                "last_used_at": usage.last_used_at,
            }
            for interaction_id, usage in sorted(state.usage.items())
            if usage.used
        },
        "variables": {
            name: variable.current
            for name, variable in sorted(state.variables.items())
            if variable.current is not None
        },
        "facts": {
            fact_id: {"label": fact.label, "polarity": fact.polarity, "at": fact.at}
            for fact_id, fact in sorted(state.user_facts.items())
        },
        "observations": {net: dict(obs) for net, obs in sorted(state.observations.items())},
        "stats": state.stats.snapshot(),
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise StoreError(f"could not write session store {path}: {exc}") from exc


def _restore(state: SessionState, model: AgentModel, doc: Mapping) -> None:
    try:
        for interaction_id, entry in doc.get("usage", {}).items():
            if interaction_id not in model.interactions:
                continue  # model evolved; stale ids are dropped
            state.usage[interaction_id] = InteractionUsage(
                used=bool(entry["used"]),
                answered=bool(entry["answered"]),
                last_used_at=entry.get("last_used_at"),
            )
        for name, current in doc.get("variables", {}).items():
            if name in state.variables and current is not None:
                state.variables[name] = UncertainVariable(
                    name=name,
                    strategy=state.variables[name].strategy,
                    current=float(current),
                    initial=state.variables[name].initial,
                )
        for fact_id, entry in doc.get("facts", {}).items():
            state.user_facts[fact_id] = FactAnswer(
                label=str(entry["label"]),
                polarity=str(entry["polarity"]),
                at=float(entry["at"]),
            )
        for net, obs in doc.get("observations", {}).items():
            if net in model.nets:
                state.observations[net] = {str(k): bool(v) for k, v in obs.items()}
        if doc.get("stats"):
            state.stats = InteractionsStat.from_snapshot(doc["stats"])
        if doc.get("user_name"):
            state.user_name = str(doc["user_name"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StoreError(
            f"session store is corrupt ({exc!r}); delete it to start fresh"
        ) from exc


@dataclass(frozen=True)
class LogEvent:
    at: float
    seq: int
    kind: str
    payload: str


class SessionLog:
    """Append-only session log with fixed textual block formats.

    Header lines start with '# ' and carry wall-clock information; everything
    after them is deterministic given (seed, model, user responses) and is the
    surface replay tests compare byte for byte.
    """

    def __init__(self, header: Iterable[str] = ()) -> None:
        self.header: list[str] = list(header)
        self.events: list[LogEvent] = []
        self._sink = None
        self._sink_wrote_header = False

    def attach_sink(self, sink) -> None:
        """Stream events to a writable text file as they are appended."""
        self._sink = sink
        if not self._sink_wrote_header:
            for line in self.header:
                sink.write(f"# {line}\n")
            sink.flush()
            self._sink_wrote_header = True

    def append(self, at: float, kind: str, payload: str) -> LogEvent:
        if kind not in LOG_EVENT_KINDS:
            raise LogError(f"unknown log event kind {kind!r}")
        if self.events and at < self.events[-1].at:
            raise LogError(
                f"timestamps must be non-decreasing ({at} after {self.events[-1].at})"
            )
        event = LogEvent(at=at, seq=len(self.events), kind=kind, payload=payload)
        self.events.append(event)
        if self._sink is not None:
            self._sink.write(self._render_event(event) + "\n")
            self._sink.flush()
        return event

    @staticmethod
    def _render_event(event: LogEvent) -> str:
        stamp = f"[{event.at:.3f}]"
        if "\n" in event.payload:
            return f"{stamp} {event.kind}\n{event.payload}\n"
        return f"{stamp} {event.kind} {event.payload}"

    def histogram_block(self, at: float, histogram_lines: str) -> LogEvent:
        block = "***** BEGIN Regenerating interactions *****\nHistogram:\n" + histogram_lines
        return self.append(at, "histogram", block)

    def queue_block(self, at: float, numbered_lines: Iterable[str]) -> LogEvent:
        block = "Interactions queue:\n" + "\n".join(numbered_lines)
        return self.append(at, "queue_snapshot", block)

    def render(self, include_header: bool = True) -> str:
        out: list[str] = []
        if include_header:
            out.extend(f"# {line}" for line in self.header)
        out.extend(self._render_event(event) for event in self.events)
        return "\n".join(out) + "\n"

    def body(self) -> str:
        """The deterministic part: everything except '# ' header lines."""
        return self.render(include_header=False)
