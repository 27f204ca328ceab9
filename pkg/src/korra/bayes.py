"""Small binary-node Bayesian networks with exact inference by enumeration.

Covers the two network shapes the engine relies on: forward queries such as
the joke-telling rate, and probability-of-evidence scoring that turns a
contradictory answer into a surprise reaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .prob import FiniteDist, ImpossibleEvidenceError, bernoulli, from_weighted

Assignment = tuple[bool, ...]
ObservationSet = Mapping[str, bool]


class NetError(ValueError):
    """Raised when a network definition or query is malformed."""


@dataclass(frozen=True)
class BinaryNode:
    """One boolean node: P(true) for every truth assignment of its parents."""

    name: str
    parents: tuple[str, ...] = ()
    cpt: Mapping[Assignment, float] = field(default_factory=dict, hash=False)

    def __post_init__(self) -> None:
        expected = 1 << len(self.parents)
        if len(self.cpt) != expected:
            raise NetError(
                f"node {self.name!r}: cpt has {len(self.cpt)} rows, needs {expected}"
            )
        for assignment, p in self.cpt.items():
            if len(assignment) != len(self.parents):
                raise NetError(f"node {self.name!r}: cpt row {assignment} arity mismatch")
            if math.isnan(p) or not 0.0 <= p <= 1.0:
                raise NetError(f"node {self.name!r}: probability {p} out of [0, 1]")

    def prob_true(self, parent_values: Assignment) -> float:
        return self.cpt[parent_values]


def root(name: str, prior: float) -> BinaryNode:
    """A parentless node with the given prior on true."""
    return BinaryNode(name=name, parents=(), cpt={(): prior})


class BayesNet:
    """An acyclic set of binary nodes stored in a valid topological order."""

    def __init__(self, nodes: list[BinaryNode] | tuple[BinaryNode, ...]):
        by_name: dict[str, BinaryNode] = {}
        for node in nodes:
            if node.name in by_name:
                raise NetError(f"duplicate node name {node.name!r}")
            for parent in node.parents:
                if parent not in by_name:
                    raise NetError(
                        f"node {node.name!r}: parent {parent!r} missing or out of order"
                    )
            by_name[node.name] = node
        if not by_name:
            raise NetError("network needs at least one node")
        self._nodes = tuple(nodes)
        self._by_name = by_name

    @property
    def nodes(self) -> tuple[BinaryNode, ...]:
        return self._nodes

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self._nodes)

    def node(self, name: str) -> BinaryNode:
        try:
            return self._by_name[name]
        except KeyError:
            raise NetError(f"unknown node {name!r}") from None

    def validate_observations(self, observations: ObservationSet) -> None:
        for name in observations:
            if name not in self._by_name:
                raise NetError(f"observation of unknown node {name!r}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BayesNet):
            return NotImplemented
        return self._nodes == other._nodes

    def __hash__(self) -> int:
        return hash(tuple(n.name for n in self._nodes))

    def __repr__(self) -> str:
        return f"BayesNet({', '.join(self.names)})"


def _node_prob(node: BinaryNode, assignment: dict[str, bool]) -> float:
    parent_values = tuple(assignment[p] for p in node.parents)
    p_true = node.prob_true(parent_values)
    return p_true if assignment[node.name] else 1.0 - p_true


def _enumerate(net: BayesNet, index: int, assignment: dict[str, bool]) -> float:
    """Total probability of all joint completions consistent with ``assignment``."""
    if index == len(net.nodes):
        return 1.0
    node = net.nodes[index]
    if node.name in assignment:
        return _node_prob(node, assignment) * _enumerate(net, index + 1, assignment)
    total = 0.0
    for value in (True, False):
        assignment[node.name] = value
        total += _node_prob(node, assignment) * _enumerate(net, index + 1, assignment)
    del assignment[node.name]
    return total


def probability_of_evidence(net: BayesNet, observations: ObservationSet) -> float:
    """Joint probability of the observed assignment, marginalizing the rest."""
    net.validate_observations(observations)
    return _enumerate(net, 0, dict(observations))


def forward_marginal(
    net: BayesNet, target: str, observations: ObservationSet | None = None
) -> FiniteDist[bool]:
    """Exact P(target | observations) by enumeration over unobserved nodes."""
    observations = dict(observations or {})
    net.validate_observations(observations)
    net.node(target)
    if target in observations:
        raise NetError(f"target {target!r} is observed")
    masses = []
    for value in (True, False):
        observations[target] = value
        masses.append((value, _enumerate(net, 0, observations)))
        del observations[target]
    total = masses[0][1] + masses[1][1]
    if total <= 0.0:
        raise ImpossibleEvidenceError("observations have zero probability under the network")
    return from_weighted(masses)


def posterior(
    net: BayesNet, target: str, observations: ObservationSet | None = None
) -> FiniteDist[bool]:
    """Backward query: infer a cause from observed effects.

    Mathematically the same conditional as forward_marginal; the separate name
    marks query direction at call sites (e.g. estimating a hidden user state
    from its observable consequences).
    """
    return forward_marginal(net, target, observations)


def contradiction_score(net: BayesNet, observations: ObservationSet) -> float:
    """1 - P(observations): how surprising the accumulated answers are.

    A deterministic-consistent observation set scores 0; an impossible one
    scores 1. Requires at least one observation.
    """
    if not observations:
        raise NetError("contradiction_score needs at least one observation")
    poe = probability_of_evidence(net, observations)
    return min(1.0, max(0.0, 1.0 - poe))


def tell_joke_prob(likes_joke: bool, in_good_mood: bool) -> float:
    """Truth table for how eagerly a joke should be told.

    Liking jokes while already cheerful gets a neutral rate; liking jokes in a
    bad mood boosts it (jokes cheer people up); not liking jokes pins it low.
    """
    if likes_joke and in_good_mood:
        return 0.4
    if likes_joke and not in_good_mood:
        return 0.9
    return 0.2


def joke_telling_rate(likes_prior: float, mood_prior: float) -> FiniteDist[bool]:
    """Marginal joke-telling rate from the two independent priors."""
    likes = bernoulli(likes_prior)
    mood = bernoulli(mood_prior)
    return likes.bind(
        lambda lk: mood.bind(lambda md: bernoulli(tell_joke_prob(lk, md)))
    )


def joke_net(likes_prior: float = 0.8, mood_prior: float = 0.6) -> BayesNet:
    """The joke-telling network as an explicit BayesNet."""
    return BayesNet(
        [
            root("LikesJokes", likes_prior),
            root("UserInAGoodMood", mood_prior),
            BinaryNode(
                name="JokeTellingRate",
                parents=("LikesJokes", "UserInAGoodMood"),
                cpt={
                    (True, True): tell_joke_prob(True, True),
                    (True, False): tell_joke_prob(True, False),
                    (False, True): tell_joke_prob(False, True),
                    (False, False): tell_joke_prob(False, False),
                },
            ),
        ]
    )
