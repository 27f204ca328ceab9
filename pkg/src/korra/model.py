"""The agent model data layer: categories, interactions, uncertain variables,
networks and triggers, loaded from a single JSON document.

A model is immutable after load. All mutable state accumulated while talking
to a user (used flags, variable values, weights, observations) lives in the
session, never here. Unknown fields anywhere in the document are rejected so
that model files stay exchangeable between designers without silent drift.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .bayes import BayesNet, BinaryNode, NetError
from .timing import GateParams, NormalSpec, TimingParams, TimingError
from .triggers import (
    ElapsedWatch,
    InteractionSpec,
    ModelEvaluateTrigger,
    ModelUpdateTrigger,
    ResponseWatch,
    Trigger,
    TriggerError,
    WeightEdit,
)

INTERACTION_KINDS = (
    "pure_fact_about_user",
    "pure_fact_about_agent",
    "uncertain_fact_question",
    "statement",
    "suggestion",
    "joke",
    "appearance_change",
    "state_expression",
    "placeholder",
)
POLARITIES = ("positive", "negative")
STATES = ("positive", "negative", "neutral")
SELECTIONS = ("permutation_then_uniform", "uniform_no_immediate_repeat")
STRATEGIES = ("fixed_values", "increment")

WEIGHT_SUM_TOLERANCE = 1e-9

_TAG_RE = re.compile(r"<[^>]*>")


class ModelError(ValueError):
    """Validation failure, prefixed with the offending field path."""


def _fail(path: str, message: str) -> None:
    raise ModelError(f"{path}: {message}")


def strip_ssml(text: str) -> str:
    """Drop markup tags for display; logs keep the raw annotated text."""
    return re.sub(r"\s{2,}", " ", _TAG_RE.sub("", text)).strip()


def clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class PredefinedResponse:
    label: str
    polarity: str
    value: float | None = None
    delta: float | None = None
    observe_value: bool | None = None


@dataclass(frozen=True)
class Interaction:
    id: str
    category: str
    kind: str
    text: str
    responses: tuple[PredefinedResponse, ...] = ()
    reactions: Mapping[str, str] | None = None
    repeatable: bool = False
    variable: str | None = None
    variants: tuple[tuple[str, float], ...] = ()
    observes: tuple[str, str] | None = None  # (net, node)
    captures: str | None = None  # free-text slot, e.g. user_name
    state: str | None = None  # gate for state expressions
    weight: float = 1.0  # soft preference in the uniform selection phase

    @property
    def is_question(self) -> bool:
        return bool(self.responses) or self.captures is not None

    def response_by_label(self, label: str) -> PredefinedResponse | None:
        wanted = label.strip().lower()
        for response in self.responses:
            if response.label.strip().lower() == wanted:
                return response
        return None


@dataclass(frozen=True)
class UncertainVariable:
    name: str
    strategy: str
    current: float | None = None
    initial: float | None = None

    def value(self) -> float | None:
        return self.current if self.current is not None else self.initial


@dataclass(frozen=True)
class Category:
    name: str
    interactions: tuple[str, ...]
    base_weight: float
    fixed: bool = False
    selection: str = "permutation_then_uniform"
    placeholder: bool = False
    state_variable: str | None = None


@dataclass(frozen=True)
class TuningRules:
    greet_with: tuple[str, ...] = ()
    group: tuple[tuple[str, ...], ...] = ()
    reuse_tau: float = 86_400.0
    joke_clarifications: tuple[str, ...] = ("OK, you know, that was a joke.",)
    default_duration: float = 5.0


@dataclass(frozen=True)
class AgentModel:
    name: str
    categories: tuple[Category, ...]
    interactions: Mapping[str, Interaction]
    variables: Mapping[str, UncertainVariable]
    nets: Mapping[str, BayesNet]
    net_prior_vars: Mapping[str, Mapping[str, str]] = field(default_factory=dict)
    triggers: tuple[Trigger, ...] = ()
    timing: TimingParams = TimingParams()
    gates: GateParams = GateParams()
    tuning: TuningRules = TuningRules()

    def category(self, name: str) -> Category:
        for category in self.categories:
            if category.name == name:
                return category
        raise ModelError(f"unknown category {name!r}")

    def interaction(self, interaction_id: str) -> Interaction:
        try:
            return self.interactions[interaction_id]
        except KeyError:
            raise ModelError(f"unknown interaction {interaction_id!r}") from None

    def base_weights(self) -> dict[str, float]:
        return {c.name: c.base_weight for c in self.categories}

    def fixed_categories(self) -> frozenset[str]:
        return frozenset(c.name for c in self.categories if c.fixed)


def map_response(var: UncertainVariable, response: PredefinedResponse) -> UncertainVariable:
    """Fold one answer into the variable, per its update strategy."""
    if var.strategy == "fixed_values":
        if response.value is None:
            raise ModelError(
                f"variable {var.name!r} uses fixed values but response "
                f"{response.label!r} carries none"
            )
        return replace(var, current=clamp01(response.value))
    if response.delta is None:
        raise ModelError(
            f"variable {var.name!r} uses increments but response "
            f"{response.label!r} carries no delta"
        )
    base = var.current if var.current is not None else (
        var.initial if var.initial is not None else 0.5
    )
    return replace(var, current=clamp01(base + response.delta))


def reaction_for(interaction: Interaction, response: PredefinedResponse) -> str | None:
    """The predefined reaction matching the response's polarity, if any."""
    if not interaction.reactions:
        return None
    return interaction.reactions.get(response.polarity)


# ---------------------------------------------------------------------------
# Document parsing
# ---------------------------------------------------------------------------


def _check_fields(obj: Mapping[str, Any], allowed: set[str], required: set[str], path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        _fail(path, f"unknown field {sorted(unknown)[0]!r}")
    missing = required - set(obj)
    if missing:
        _fail(path, f"missing required field {sorted(missing)[0]!r}")


def _number(obj: Mapping[str, Any], key: str, path: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(f"{path}.{key}", f"expected a number, got {value!r}")
    if math.isnan(value) or math.isinf(value):
        _fail(f"{path}.{key}", f"expected a finite number, got {value!r}")
    return float(value)


def _string(obj: Mapping[str, Any], key: str, path: str) -> str:
    value = obj[key]
    if not isinstance(value, str):
        _fail(f"{path}.{key}", f"expected a string, got {value!r}")
    return value


def _bool(obj: Mapping[str, Any], key: str, path: str, default: bool) -> bool:
    if key not in obj:
        return default
    value = obj[key]
    if not isinstance(value, bool):
        _fail(f"{path}.{key}", f"expected a boolean, got {value!r}")
    return value


def _parse_response(obj: Any, path: str) -> PredefinedResponse:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    _check_fields(obj, {"label", "polarity", "value", "delta", "observe_value"}, {"label", "polarity"}, path)
    label = _string(obj, "label", path)
    polarity = _string(obj, "polarity", path)
    if polarity not in POLARITIES:
        _fail(f"{path}.polarity", f"must be one of {POLARITIES}, got {polarity!r}")
    value = _number(obj, "value", path) if "value" in obj else None
    delta = _number(obj, "delta", path) if "delta" in obj else None
    if value is not None and delta is not None:
        _fail(path, "response carries both value and delta; exactly one is allowed")
    if value is not None and not 0.0 <= value <= 1.0:
        _fail(f"{path}.value", f"must be in [0, 1], got {value}")
    observe_value = obj.get("observe_value")
    if observe_value is not None and not isinstance(observe_value, bool):
        _fail(f"{path}.observe_value", f"expected a boolean, got {observe_value!r}")
    return PredefinedResponse(
        label=label, polarity=polarity, value=value, delta=delta, observe_value=observe_value
    )


def _parse_variants(obj: Any, path: str) -> tuple[tuple[str, float], ...]:
    if not isinstance(obj, list) or not obj:
        _fail(path, "expected a non-empty list")
    out = []
    for i, item in enumerate(obj):
        if isinstance(item, str):
            out.append((item, 1.0))
        elif isinstance(item, dict):
            _check_fields(item, {"text", "weight"}, {"text"}, f"{path}[{i}]")
            weight = _number(item, "weight", f"{path}[{i}]") if "weight" in item else 1.0
            if weight <= 0:
                _fail(f"{path}[{i}].weight", f"must be positive, got {weight}")
            out.append((_string(item, "text", f"{path}[{i}]"), weight))
        else:
            _fail(f"{path}[{i}]", "expected a string or an object")
    return tuple(out)


def _parse_interaction(obj: Any, path: str) -> Interaction:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    allowed = {
        "id", "category", "kind", "text", "responses", "reactions", "repeatable",
        "variable", "variants", "observes", "captures", "state", "weight",
    }
    _check_fields(obj, allowed, {"id", "category", "kind"}, path)
    kind = _string(obj, "kind", path)
    if kind not in INTERACTION_KINDS:
        _fail(f"{path}.kind", f"must be one of {INTERACTION_KINDS}, got {kind!r}")
    text = _string(obj, "text", path) if "text" in obj else ""
    if kind == "placeholder" and text:
        _fail(f"{path}.text", "placeholder interactions carry no text until filled")
    if kind != "placeholder" and not text:
        _fail(f"{path}.text", "non-placeholder interactions need text")
    responses = tuple(
        _parse_response(r, f"{path}.responses[{i}]")
        for i, r in enumerate(obj.get("responses", []))
    )
    reactions = obj.get("reactions")
    if reactions is not None:
        if not isinstance(reactions, dict):
            _fail(f"{path}.reactions", "expected an object")
        _check_fields(reactions, set(POLARITIES), set(), f"{path}.reactions")
        reactions = {k: str(v) for k, v in reactions.items()}
    observes = obj.get("observes")
    if observes is not None:
        if not isinstance(observes, dict):
            _fail(f"{path}.observes", "expected an object")
        _check_fields(observes, {"net", "node"}, {"net", "node"}, f"{path}.observes")
        observes = (str(observes["net"]), str(observes["node"]))
    state = obj.get("state")
    if state is not None and state not in STATES:
        _fail(f"{path}.state", f"must be one of {STATES}, got {state!r}")
    weight = _number(obj, "weight", path) if "weight" in obj else 1.0
    if weight <= 0:
        _fail(f"{path}.weight", f"must be positive, got {weight}")
    return Interaction(
        id=_string(obj, "id", path),
        category=_string(obj, "category", path),
        kind=kind,
        text=text,
        responses=responses,
        reactions=reactions,
        repeatable=_bool(obj, "repeatable", path, False),
        variable=_string(obj, "variable", path) if "variable" in obj else None,
        variants=_parse_variants(obj["variants"], f"{path}.variants") if "variants" in obj else (),
        observes=observes,
        captures=_string(obj, "captures", path) if "captures" in obj else None,
        state=state,
        weight=weight,
    )


def _parse_category(obj: Any, path: str) -> tuple[Category, None]:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    allowed = {"name", "weight", "fixed", "selection", "placeholder", "state_variable"}
    _check_fields(obj, allowed, {"name", "weight"}, path)
    selection = obj.get("selection", "permutation_then_uniform")
    if selection not in SELECTIONS:
        _fail(f"{path}.selection", f"must be one of {SELECTIONS}, got {selection!r}")
    weight = _number(obj, "weight", path)
    if weight < 0:
        _fail(f"{path}.weight", f"must be nonnegative, got {weight}")
    category = Category(
        name=_string(obj, "name", path),
        interactions=(),  # filled after interactions parse
        base_weight=weight,
        fixed=_bool(obj, "fixed", path, False),
        selection=selection,
        placeholder=_bool(obj, "placeholder", path, False),
        state_variable=_string(obj, "state_variable", path) if "state_variable" in obj else None,
    )
    return category, None


def _parse_variable(obj: Any, path: str) -> UncertainVariable:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    _check_fields(obj, {"name", "strategy", "initial"}, {"name", "strategy"}, path)
    strategy = _string(obj, "strategy", path)
    if strategy not in STRATEGIES:
        _fail(f"{path}.strategy", f"must be one of {STRATEGIES}, got {strategy!r}")
    initial = _number(obj, "initial", path) if "initial" in obj else None
    if initial is not None and not 0.0 <= initial <= 1.0:
        _fail(f"{path}.initial", f"must be in [0, 1], got {initial}")
    return UncertainVariable(name=_string(obj, "name", path), strategy=strategy, initial=initial)


def _parse_net(obj: Any, path: str) -> tuple[str, BayesNet, dict[str, str]]:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    _check_fields(obj, {"name", "nodes"}, {"name", "nodes"}, path)
    name = _string(obj, "name", path)
    nodes_doc = obj["nodes"]
    if not isinstance(nodes_doc, list) or not nodes_doc:
        _fail(f"{path}.nodes", "expected a non-empty list")
    nodes: list[BinaryNode] = []
    prior_vars: dict[str, str] = {}
    for i, node_doc in enumerate(nodes_doc):
        node_path = f"{path}.nodes[{i}]"
        if not isinstance(node_doc, dict):
            _fail(node_path, "expected an object")
        _check_fields(node_doc, {"name", "prior", "prior_var", "parents", "cpt"}, {"name"}, node_path)
        node_name = _string(node_doc, "name", node_path)
        parents = tuple(node_doc.get("parents", []))
        if parents:
            if "prior" in node_doc or "prior_var" in node_doc:
                _fail(node_path, "nodes with parents take a cpt, not a prior")
            cpt_doc = node_doc.get("cpt")
            if not isinstance(cpt_doc, dict):
                _fail(f"{node_path}.cpt", "expected an object keyed by T/F strings")
            cpt: dict[tuple[bool, ...], float] = {}
            for key, value in cpt_doc.items():
                if len(key) != len(parents) or set(key) - {"T", "F"}:
                    _fail(f"{node_path}.cpt", f"bad row key {key!r} for {len(parents)} parent(s)")
                row = tuple(ch == "T" for ch in key)
                cpt[row] = _number({"p": value}, "p", f"{node_path}.cpt[{key}]")
            expected_rows = 1 << len(parents)
            if len(cpt) != expected_rows:
                _fail(f"{node_path}.cpt", f"needs {expected_rows} rows, got {len(cpt)}")
        else:
            if "cpt" in node_doc:
                _fail(node_path, "root nodes take a prior, not a cpt")
            if "prior" not in node_doc:
                _fail(node_path, "missing required field 'prior'")
            cpt = {(): _number(node_doc, "prior", node_path)}
            if "prior_var" in node_doc:
                prior_vars[node_name] = _string(node_doc, "prior_var", node_path)
        try:
            nodes.append(BinaryNode(name=node_name, parents=parents, cpt=cpt))
        except NetError as exc:
            _fail(node_path, str(exc))
    try:
        return name, BayesNet(nodes), prior_vars
    except NetError as exc:
        _fail(path, str(exc))
        raise  # unreachable


def _parse_trigger(obj: Any, path: str) -> Trigger:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    kind = obj.get("type")
    if kind == "update":
        _check_fields(obj, {"id", "type", "watch", "edits", "resample", "once"}, {"id", "type", "watch", "edits"}, path)
        watch_doc = obj["watch"]
        if not isinstance(watch_doc, dict):
            _fail(f"{path}.watch", "expected an object")
        if "elapsed" in watch_doc:
            _check_fields(watch_doc, {"elapsed"}, {"elapsed"}, f"{path}.watch")
            watch: ResponseWatch | ElapsedWatch = ElapsedWatch(
                _number(watch_doc, "elapsed", f"{path}.watch")
            )
        else:
            _check_fields(watch_doc, {"fact", "polarity"}, {"fact", "polarity"}, f"{path}.watch")
            polarity = _string(watch_doc, "polarity", f"{path}.watch")
            if polarity not in POLARITIES:
                _fail(f"{path}.watch.polarity", f"must be one of {POLARITIES}, got {polarity!r}")
            watch = ResponseWatch(_string(watch_doc, "fact", f"{path}.watch"), polarity)
        edits_doc = obj["edits"]
        if not isinstance(edits_doc, list) or not edits_doc:
            _fail(f"{path}.edits", "expected a non-empty list")
        edits = []
        for i, edit_doc in enumerate(edits_doc):
            edit_path = f"{path}.edits[{i}]"
            if not isinstance(edit_doc, dict):
                _fail(edit_path, "expected an object")
            _check_fields(edit_doc, {"category", "multiply", "set_to"}, {"category"}, edit_path)
            try:
                edits.append(
                    WeightEdit(
                        category=_string(edit_doc, "category", edit_path),
                        multiply=_number(edit_doc, "multiply", edit_path) if "multiply" in edit_doc else None,
                        set_to=_number(edit_doc, "set_to", edit_path) if "set_to" in edit_doc else None,
                    )
                )
            except TriggerError as exc:
                _fail(edit_path, str(exc))
        return ModelUpdateTrigger(
            id=_string(obj, "id", path),
            watch=watch,
            edits=tuple(edits),
            resample=_bool(obj, "resample", path, True),
            once=_bool(obj, "once", path, False),
        )
    if kind == "evaluate":
        _check_fields(obj, {"id", "type", "net", "threshold", "interaction"}, {"id", "type", "net", "threshold", "interaction"}, path)
        spec_doc = obj["interaction"]
        if not isinstance(spec_doc, dict):
            _fail(f"{path}.interaction", "expected an object")
        _check_fields(spec_doc, {"category", "text", "kind"}, {"category", "text"}, f"{path}.interaction")
        spec = InteractionSpec(
            category=_string(spec_doc, "category", f"{path}.interaction"),
            text=_string(spec_doc, "text", f"{path}.interaction"),
            kind=spec_doc.get("kind", "state_expression"),
        )
        try:
            return ModelEvaluateTrigger(
                id=_string(obj, "id", path),
                net=_string(obj, "net", path),
                threshold=_number(obj, "threshold", path),
                interaction=spec,
            )
        except TriggerError as exc:
            _fail(path, str(exc))
    _fail(f"{path}.type", f"must be 'update' or 'evaluate', got {kind!r}")
    raise AssertionError  # unreachable


def _parse_normal(obj: Any, path: str) -> NormalSpec:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    _check_fields(obj, {"mean", "variance"}, {"mean", "variance"}, path)
    try:
        return NormalSpec(_number(obj, "mean", path), _number(obj, "variance", path))
    except TimingError as exc:
        _fail(path, str(exc))
        raise  # unreachable


def _parse_timing(obj: Any, path: str) -> TimingParams:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    allowed = {"smile", "gaze_hold", "pause_new", "pause_react", "response_timeout", "floor", "gaze_return_after"}
    _check_fields(obj, allowed, set(), path)
    defaults = TimingParams()
    kwargs: dict[str, Any] = {}
    for kind in ("smile", "gaze_hold", "pause_new", "pause_react", "response_timeout"):
        kwargs[kind] = _parse_normal(obj[kind], f"{path}.{kind}") if kind in obj else getattr(defaults, kind)
    kwargs["floor"] = _number(obj, "floor", path) if "floor" in obj else defaults.floor
    kwargs["gaze_return_after"] = (
        _number(obj, "gaze_return_after", path) if "gaze_return_after" in obj else defaults.gaze_return_after
    )
    try:
        return TimingParams(**kwargs)
    except TimingError as exc:
        _fail(path, str(exc))
        raise  # unreachable


def _parse_gates(obj: Any, path: str) -> GateParams:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    _check_fields(obj, {"address_by_name", "joke_clarify"}, set(), path)
    defaults = GateParams()
    try:
        return GateParams(
            address_by_name_p=_number(obj, "address_by_name", path) if "address_by_name" in obj else defaults.address_by_name_p,
            joke_clarify_p=_number(obj, "joke_clarify", path) if "joke_clarify" in obj else defaults.joke_clarify_p,
        )
    except TimingError as exc:
        _fail(path, str(exc))
        raise  # unreachable


def _parse_tuning(obj: Any, path: str) -> TuningRules:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    allowed = {"greet_with", "group", "reuse_tau", "joke_clarifications", "default_duration"}
    _check_fields(obj, allowed, set(), path)
    defaults = TuningRules()
    greet = tuple(obj.get("greet_with", ()))
    groups = tuple(tuple(g) for g in obj.get("group", ()))
    for gi, group in enumerate(groups):
        if len(group) < 2:
            _fail(f"{path}.group[{gi}]", "a group needs at least two interaction ids")
    clarifications = tuple(obj.get("joke_clarifications", defaults.joke_clarifications))
    reuse_tau = _number(obj, "reuse_tau", path) if "reuse_tau" in obj else defaults.reuse_tau
    if reuse_tau <= 0:
        _fail(f"{path}.reuse_tau", f"must be positive, got {reuse_tau}")
    default_duration = (
        _number(obj, "default_duration", path) if "default_duration" in obj else defaults.default_duration
    )
    if default_duration <= 0:
        _fail(f"{path}.default_duration", f"must be positive, got {default_duration}")
    return TuningRules(
        greet_with=greet,
        group=groups,
        reuse_tau=reuse_tau,
        joke_clarifications=clarifications,
        default_duration=default_duration,
    )


def model_from_dict(doc: Mapping[str, Any]) -> AgentModel:
    """Validate and build an AgentModel from a parsed JSON document."""
    if not isinstance(doc, Mapping):
        _fail("$", "model document must be an object")
    allowed = {"name", "categories", "interactions", "variables", "nets", "triggers", "timing", "gates", "tuning"}
    _check_fields(doc, allowed, {"categories", "interactions"}, "$")

    name = doc.get("name", "agent")
    categories_doc = doc["categories"]
    if not isinstance(categories_doc, list) or not categories_doc:
        _fail("$.categories", "expected a non-empty list")
    categories = [_parse_category(c, f"$.categories[{i}]")[0] for i, c in enumerate(categories_doc)]
    names = [c.name for c in categories]
    if len(set(names)) != len(names):
        _fail("$.categories", "category names must be unique")
    weight_sum = math.fsum(c.base_weight for c in categories)
    if abs(weight_sum - 1.0) > WEIGHT_SUM_TOLERANCE:
        _fail("$.categories", f"category weights must sum to 1, got {weight_sum!r}")

    interactions_doc = doc["interactions"]
    if not isinstance(interactions_doc, list) or not interactions_doc:
        _fail("$.interactions", "expected a non-empty list")
    interactions: dict[str, Interaction] = {}
    for i, interaction_doc in enumerate(interactions_doc):
        interaction = _parse_interaction(interaction_doc, f"$.interactions[{i}]")
        if interaction.id in interactions:
            _fail(f"$.interactions[{i}].id", f"duplicate interaction id {interaction.id!r}")
        interactions[interaction.id] = interaction

    variables = {}
    for i, var_doc in enumerate(doc.get("variables", [])):
        variable = _parse_variable(var_doc, f"$.variables[{i}]")
        if variable.name in variables:
            _fail(f"$.variables[{i}].name", f"duplicate variable {variable.name!r}")
        variables[variable.name] = variable

    nets: dict[str, BayesNet] = {}
    net_prior_vars: dict[str, dict[str, str]] = {}
    for i, net_doc in enumerate(doc.get("nets", [])):
        net_name, net, prior_vars = _parse_net(net_doc, f"$.nets[{i}]")
        if net_name in nets:
            _fail(f"$.nets[{i}].name", f"duplicate net {net_name!r}")
        nets[net_name] = net
        if prior_vars:
            net_prior_vars[net_name] = prior_vars

    triggers = tuple(
        _parse_trigger(t, f"$.triggers[{i}]") for i, t in enumerate(doc.get("triggers", []))
    )

    timing = _parse_timing(doc["timing"], "$.timing") if "timing" in doc else TimingParams()
    gates = _parse_gates(doc["gates"], "$.gates") if "gates" in doc else GateParams()
    tuning = _parse_tuning(doc["tuning"], "$.tuning") if "tuning" in doc else TuningRules()

    # cross-reference checks
    category_names = set(names)
    for i, interaction in enumerate(interactions.values()):
        path = f"$.interactions[{i}]"
        if interaction.category not in category_names:
            _fail(f"{path}.category", f"unknown category {interaction.category!r}")
        if interaction.kind == "uncertain_fact_question":
            if interaction.variable is None:
                _fail(f"{path}.variable", "uncertain-fact questions must name their variable")
            if len(interaction.responses) < 2:
                _fail(f"{path}.responses", "uncertain-fact questions need at least 2 responses")
        if interaction.variable is not None:
            if interaction.variable not in variables:
                _fail(f"{path}.variable", f"unknown variable {interaction.variable!r}")
            strategy = variables[interaction.variable].strategy
            for ri, response in enumerate(interaction.responses):
                if strategy == "fixed_values" and response.value is None:
                    _fail(f"{path}.responses[{ri}]", "fixed-value variable needs 'value' on every response")
                if strategy == "increment" and response.delta is None:
                    _fail(f"{path}.responses[{ri}]", "increment variable needs 'delta' on every response")
        if interaction.observes is not None:
            net_name, node_name = interaction.observes
            if net_name not in nets:
                _fail(f"{path}.observes.net", f"unknown net {net_name!r}")
            if node_name not in nets[net_name].names:
                _fail(f"{path}.observes.node", f"unknown node {node_name!r} in net {net_name!r}")

    for net_name, prior_vars in net_prior_vars.items():
        for node_name, var_name in prior_vars.items():
            if var_name not in variables:
                _fail(f"$.nets[{net_name}].{node_name}.prior_var", f"unknown variable {var_name!r}")

    by_category: dict[str, list[str]] = {n: [] for n in names}
    for interaction in interactions.values():
        by_category[interaction.category].append(interaction.id)
    categories = [
        replace(category, interactions=tuple(by_category[category.name]))
        for category in categories
    ]
    for i, category in enumerate(categories):
        path = f"$.categories[{i}]"
        if category.state_variable is not None and category.state_variable not in variables:
            _fail(f"{path}.state_variable", f"unknown variable {category.state_variable!r}")
        if category.placeholder and category.state_variable is None:
            _fail(path, "placeholder categories must name a state_variable")
        if category.base_weight > 0 and not category.interactions and not category.placeholder:
            _fail(path, f"category {category.name!r} has positive weight but no interactions")

    for i, trigger in enumerate(triggers):
        path = f"$.triggers[{i}]"
        if isinstance(trigger, ModelUpdateTrigger):
            if isinstance(trigger.watch, ResponseWatch) and trigger.watch.fact_id not in interactions:
                _fail(f"{path}.watch.fact", f"unknown interaction {trigger.watch.fact_id!r}")
            for edit in trigger.edits:
                if edit.category not in category_names:
                    _fail(f"{path}.edits", f"unknown category {edit.category!r}")
        else:
            if trigger.net not in nets:
                _fail(f"{path}.net", f"unknown net {trigger.net!r}")
            if trigger.interaction.category not in category_names:
                _fail(f"{path}.interaction.category", f"unknown category {trigger.interaction.category!r}")
            if trigger.interaction.kind not in INTERACTION_KINDS:
                _fail(f"{path}.interaction.kind", f"unknown kind {trigger.interaction.kind!r}")

    for gi, group in enumerate(tuning.group):
        for interaction_id in group:
            if interaction_id not in interactions:
                _fail(f"$.tuning.group[{gi}]", f"unknown interaction {interaction_id!r}")
    for interaction_id in tuning.greet_with:
        if interaction_id not in interactions:
            _fail("$.tuning.greet_with", f"unknown interaction {interaction_id!r}")

    return AgentModel(
        name=str(name),
        categories=tuple(categories),
        interactions=interactions,
        variables=variables,
        nets=nets,
        net_prior_vars={k: dict(v) for k, v in net_prior_vars.items()},
        triggers=triggers,
        timing=timing,
        gates=gates,
        tuning=tuning,
    )


def load_model(source: str | Path | Mapping[str, Any]) -> AgentModel:
    """Load a model from a JSON file path or an already-parsed document."""
    if isinstance(source, Mapping):
        return model_from_dict(source)
    path = Path(source)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc)


def serialize_model(model: AgentModel) -> dict[str, Any]:
    """Inverse of model_from_dict: loading the result reproduces the model."""
    doc: dict[str, Any] = {"name": model.name}
    doc["categories"] = []
    for category in model.categories:
        entry: dict[str, Any] = {"name": category.name, "weight": category.base_weight}
        if category.fixed:
            entry["fixed"] = True
        if category.selection != "permutation_then_uniform":
            entry["selection"] = category.selection
        if category.placeholder:
            entry["placeholder"] = True
        if category.state_variable:
            entry["state_variable"] = category.state_variable
        doc["categories"].append(entry)
    doc["interactions"] = []
    for interaction in model.interactions.values():
        entry = {"id": interaction.id, "category": interaction.category, "kind": interaction.kind}
        if interaction.text:
            entry["text"] = interaction.text
        if interaction.responses:
            entry["responses"] = []
            for response in interaction.responses:
                r: dict[str, Any] = {"label": response.label, "polarity": response.polarity}
                if response.value is not None:
                    r["value"] = response.value
                if response.delta is not None:
                    r["delta"] = response.delta
                if response.observe_value is not None:
                    r["observe_value"] = response.observe_value
                entry["responses"].append(r)
        if interaction.reactions:
            entry["reactions"] = dict(interaction.reactions)
        if interaction.repeatable:
            entry["repeatable"] = True
        if interaction.variable:
            entry["variable"] = interaction.variable
        if interaction.variants:
            entry["variants"] = [
                text if weight == 1.0 else {"text": text, "weight": weight}
                for text, weight in interaction.variants
            ]
        if interaction.observes:
            entry["observes"] = {"net": interaction.observes[0], "node": interaction.observes[1]}
        if interaction.captures:
            entry["captures"] = interaction.captures
        if interaction.state:
            entry["state"] = interaction.state
        if interaction.weight != 1.0:
            entry["weight"] = interaction.weight
        doc["interactions"].append(entry)
    if model.variables:
        doc["variables"] = []
        for variable in model.variables.values():
            entry = {"name": variable.name, "strategy": variable.strategy}
            if variable.initial is not None:
                entry["initial"] = variable.initial
            doc["variables"].append(entry)
    if model.nets:
        doc["nets"] = []
        for net_name, net in model.nets.items():
            nodes = []
            for node in net.nodes:
                node_entry: dict[str, Any] = {"name": node.name}
                if node.parents:
                    node_entry["parents"] = list(node.parents)
                    node_entry["cpt"] = {
                        "".join("T" if v else "F" for v in combo): node.cpt[combo]
                        for combo in itertools.product([True, False], repeat=len(node.parents))
                    }
                else:
                    node_entry["prior"] = node.cpt[()]
                    prior_var = model.net_prior_vars.get(net_name, {}).get(node.name)
                    if prior_var:
                        node_entry["prior_var"] = prior_var
                nodes.append(node_entry)
            doc["nets"].append({"name": net_name, "nodes": nodes})
    if model.triggers:
        doc["triggers"] = []
        for trigger in model.triggers:
            if isinstance(trigger, ModelUpdateTrigger):
                watch: dict[str, Any]
                if isinstance(trigger.watch, ElapsedWatch):
                    watch = {"elapsed": trigger.watch.seconds}
                else:
                    watch = {"fact": trigger.watch.fact_id, "polarity": trigger.watch.polarity}
                edits = []
                for edit in trigger.edits:
                    e: dict[str, Any] = {"category": edit.category}
                    if edit.multiply is not None:
                        e["multiply"] = edit.multiply
                    if edit.set_to is not None:
                        e["set_to"] = edit.set_to
                    edits.append(e)
                entry = {"id": trigger.id, "type": "update", "watch": watch, "edits": edits}
                if not trigger.resample:
                    entry["resample"] = False
                if trigger.once:
                    entry["once"] = True
            else:
                entry = {
                    "id": trigger.id,
                    "type": "evaluate",
                    "net": trigger.net,
                    "threshold": trigger.threshold,
                    "interaction": {
                        "category": trigger.interaction.category,
                        "text": trigger.interaction.text,
                        "kind": trigger.interaction.kind,
                    },
                }
            doc["triggers"].append(entry)
    doc["timing"] = {
        kind: {"mean": spec.mean, "variance": spec.variance}
        for kind in ("smile", "gaze_hold", "pause_new", "pause_react", "response_timeout")
        for spec in [getattr(model.timing, kind)]
    }
    doc["timing"]["floor"] = model.timing.floor
    doc["timing"]["gaze_return_after"] = model.timing.gaze_return_after
    doc["gates"] = {
        "address_by_name": model.gates.address_by_name_p,
        "joke_clarify": model.gates.joke_clarify_p,
    }
    doc["tuning"] = {
        "greet_with": list(model.tuning.greet_with),
        "group": [list(g) for g in model.tuning.group],
        "reuse_tau": model.tuning.reuse_tau,
        "joke_clarifications": list(model.tuning.joke_clarifications),
        "default_duration": model.tuning.default_duration,
    }
    return doc
