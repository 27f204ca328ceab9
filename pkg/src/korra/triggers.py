"""Model triggers: the only mechanisms that reshape the category distribution
or inject interactions at runtime.

Two kinds with deliberately asymmetric capabilities:

* update triggers watch responses or elapsed time, edit category weights and
  may request a resample of the unexecuted queue; they can never add
  interactions.
* evaluate triggers score accumulated answers against a Bayesian network and
  may inject a new interaction (plus a facial cue); they can never resample
  or watch the clock.

The asymmetry is structural: each trigger type simply has no fields for the
other's capabilities, and the model loader rejects any attempt to add them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .bayes import BayesNet, contradiction_score


class TriggerError(ValueError):
    pass


@dataclass(frozen=True)
class ResponseWatch:
    fact_id: str
    polarity: str  # "positive" | "negative"


@dataclass(frozen=True)
class ElapsedWatch:
    seconds: float

    def __post_init__(self) -> None:
        if self.seconds < 0:
            raise TriggerError(f"elapsed watch must be nonnegative, got {self.seconds}")


@dataclass(frozen=True)
class WeightEdit:
    category: str
    multiply: float | None = None
    set_to: float | None = None

    def __post_init__(self) -> None:
        if (self.multiply is None) == (self.set_to is None):
            raise TriggerError("weight edit needs exactly one of multiply/set_to")
        if self.multiply is not None and self.multiply <= 0:
            raise TriggerError(f"multiply factor must be positive, got {self.multiply}")
        if self.set_to is not None and not 0.0 <= self.set_to <= 1.0:
            raise TriggerError(f"set_to must be in [0, 1], got {self.set_to}")

    def apply(self, weight: float) -> float:
        if self.multiply is not None:
            return weight * self.multiply
        return float(self.set_to)  # type: ignore[arg-type]


@dataclass(frozen=True)
class ModelUpdateTrigger:
    id: str
    watch: Union[ResponseWatch, ElapsedWatch]
    edits: tuple[WeightEdit, ...]
    resample: bool = True
    once: bool = False


@dataclass(frozen=True)
class InteractionSpec:
    """Template for an interaction an evaluate trigger may inject."""

    category: str
    text: str
    kind: str = "state_expression"


@dataclass(frozen=True)
class ModelEvaluateTrigger:
    id: str
    net: str
    threshold: float
    interaction: InteractionSpec

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise TriggerError(f"threshold must be in [0, 1], got {self.threshold}")


Trigger = Union[ModelUpdateTrigger, ModelEvaluateTrigger]


@dataclass(frozen=True)
class DistributionEdit:
    trigger_id: str
    edits: tuple[WeightEdit, ...]


@dataclass(frozen=True)
class ResampleRequest:
    trigger_id: str


@dataclass(frozen=True)
class InjectInteraction:
    trigger_id: str
    spec: InteractionSpec
    score: float


@dataclass(frozen=True)
class FacialCue:
    trigger_id: str
    cue: str


TriggerEffect = Union[DistributionEdit, ResampleRequest, InjectInteraction, FacialCue]


def observation_fingerprint(trigger_id: str, observations: Mapping[str, bool]) -> str:
    body = ",".join(f"{k}={v}" for k, v in sorted(observations.items()))
    return f"{trigger_id}:{body}"


def response_effects(
    triggers: Sequence[Trigger],
    *,
    fact_id: str,
    polarity: str,
    nets: Mapping[str, BayesNet],
    observations: Mapping[str, Mapping[str, bool]],
    fired: frozenset[str] | set[str],
    met_fired: frozenset[str] | set[str],
) -> tuple[list[TriggerEffect], list[str], list[str]]:
    """Evaluate all triggers against one applied response.

    The response must already be recorded in the session (facts, variables and
    net observations updated). Returns (effects, newly fired update-trigger
    ids, newly fired evaluate-trigger fingerprints). Unmatched triggers stay
    silent.
    """
    effects: list[TriggerEffect] = []
    newly_fired: list[str] = []
    newly_met: list[str] = []
    for trigger in triggers:
        if isinstance(trigger, ModelUpdateTrigger):
            watch = trigger.watch
            if not isinstance(watch, ResponseWatch):
                continue
            if watch.fact_id != fact_id or watch.polarity != polarity:
                continue
            if trigger.once and trigger.id in fired:
                continue
            newly_fired.append(trigger.id)
            effects.append(DistributionEdit(trigger.id, trigger.edits))
            if trigger.resample:
                effects.append(ResampleRequest(trigger.id))
        else:
            obs = observations.get(trigger.net, {})
            if not obs:
                continue
            score = contradiction_score(nets[trigger.net], obs)
            if score <= trigger.threshold:
                continue
            fingerprint = observation_fingerprint(trigger.id, obs)
            if fingerprint in met_fired:
                continue
            newly_met.append(fingerprint)
            effects.append(InjectInteraction(trigger.id, trigger.interaction, score))
            effects.append(FacialCue(trigger.id, "surprise"))
    return effects, newly_fired, newly_met


def tick_effects(
    triggers: Sequence[Trigger],
    *,
    now: float,
    fired: frozenset[str] | set[str],
) -> tuple[list[TriggerEffect], list[str]]:
    """Fire elapsed-time update triggers whose threshold has been crossed.

    Time triggers are edge-triggered: each fires at most once per session,
    on the first tick at or past its threshold. Multiple due triggers fire
    in threshold order.
    """
    due = [
        t
        for t in triggers
        if isinstance(t, ModelUpdateTrigger)
        and isinstance(t.watch, ElapsedWatch)
        and t.watch.seconds <= now
        and t.id not in fired
    ]
    due.sort(key=lambda t: t.watch.seconds)  # type: ignore[union-attr]
    effects: list[TriggerEffect] = []
    newly_fired: list[str] = []
    for trigger in due:
        newly_fired.append(trigger.id)
        effects.append(DistributionEdit(trigger.id, trigger.edits))
        if trigger.resample:
            effects.append(ResampleRequest(trigger.id))
    return effects, newly_fired


def apply_edits(
    weights: Mapping[str, float], effects: Sequence[TriggerEffect]
) -> dict[str, float]:
    """Apply every distribution edit, returning the new raw weight map.

    Raw weights may stop summing to 1 here; the scheduler's effective
    distribution renormalizes at sampling time.
    """
    out = dict(weights)
    for effect in effects:
        if not isinstance(effect, DistributionEdit):
            continue
        for edit in effect.edits:
            if edit.category not in out:
                raise TriggerError(f"edit references unknown category {edit.category!r}")
            new = edit.apply(out[edit.category])
            if math.isnan(new) or new < 0:
                raise TriggerError(f"edit produced invalid weight {new} for {edit.category!r}")
            out[edit.category] = new
    return out
