from __future__ import annotations

from random import Random

import pytest

from korra.bayes import (
    BayesNet,
    BinaryNode,
    NetError,
    contradiction_score,
    forward_marginal,
    joke_net,
    joke_telling_rate,
    posterior,
    probability_of_evidence,
    root,
    tell_joke_prob,
)
from korra.prob import ImpossibleEvidenceError

from .oracles import oracle_marginal, oracle_poe, random_net, random_observations


def surprise_net() -> BayesNet:
    """Demo gift-surprise network: illustrative CPTs, tested only against oracles."""
    return BayesNet(
        [
            root("IsYoung", 0.5),
            root("HasTwitchAccount", 0.5),
            BinaryNode(
                name="UserLikesVideoGames",
                parents=("IsYoung", "HasTwitchAccount"),
                cpt={
                    (True, True): 0.9,
                    (True, False): 0.6,
                    (False, True): 0.7,
                    (False, False): 0.2,
                },
            ),
            BinaryNode(
                name="ThinksAVideoGameIsAGoodPresent",
                parents=("UserLikesVideoGames",),
                cpt={(True,): 0.8, (False,): 0.1},
            ),
        ]
    )


class TestTellJokeProb:
    def test_truth_table(self):
        assert tell_joke_prob(True, True) == 0.4
        assert tell_joke_prob(True, False) == 0.9
        assert tell_joke_prob(False, True) == 0.2
        assert tell_joke_prob(False, False) == 0.2


class TestJokeTellingRate:
    def test_degenerate_priors_select_single_cell(self):
        assert joke_telling_rate(1.0, 1.0).weight(True) == 0.4
        assert joke_telling_rate(1.0, 0.0).weight(True) == 0.9
        assert joke_telling_rate(0.0, 1.0).weight(True) == 0.2
        assert joke_telling_rate(0.0, 0.0).weight(True) == 0.2

    def test_mixed_priors_match_cell_enumeration(self):
        # hand enumeration: 0.8*0.6*0.4 + 0.8*0.4*0.9 + 0.2*0.6*0.2 + 0.2*0.4*0.2 = 0.52
        assert joke_telling_rate(0.8, 0.6).weight(True) == pytest.approx(0.52, abs=1e-12)

    def test_matches_explicit_net(self):
        got = forward_marginal(joke_net(0.8, 0.6), "JokeTellingRate").weight(True)
        assert got == pytest.approx(0.52, abs=1e-12)


class TestNodeValidation:
    def test_cpt_row_count_enforced(self):
        with pytest.raises(NetError):
            BinaryNode(name="x", parents=("a", "b"), cpt={(True, True): 0.5})

    def test_probability_range_enforced(self):
        with pytest.raises(NetError):
            root("x", 1.5)

    def test_parent_order_must_be_topological(self):
        with pytest.raises(NetError):
            BayesNet([BinaryNode(name="b", parents=("a",), cpt={(True,): 1, (False,): 0})])

    def test_duplicate_names_rejected(self):
        with pytest.raises(NetError):
            BayesNet([root("a", 0.5), root("a", 0.5)])

    def test_unknown_observation_rejected(self):
        with pytest.raises(NetError):
            forward_marginal(joke_net(), "JokeTellingRate", {"nope": True})


class TestForwardMarginal:
    def test_root_prior_without_observations(self):
        net = surprise_net()
        assert forward_marginal(net, "IsYoung").weight(True) == pytest.approx(0.5, abs=1e-12)

    def test_all_parents_observed_reduces_to_cpt_row(self):
        net = surprise_net()
        d = forward_marginal(
            net, "UserLikesVideoGames", {"IsYoung": True, "HasTwitchAccount": False}
        )
        assert d.weight(True) == pytest.approx(0.6, abs=1e-12)

    def test_target_observed_rejected(self):
        with pytest.raises(NetError):
            forward_marginal(surprise_net(), "IsYoung", {"IsYoung": True})

    def test_impossible_evidence(self):
        net = BayesNet(
            [
                root("a", 1.0),
                BinaryNode(name="b", parents=("a",), cpt={(True,): 1.0, (False,): 0.0}),
            ]
        )
        with pytest.raises(ImpossibleEvidenceError):
            forward_marginal(net, "a", {"b": False})


class TestPosterior:
    def test_equals_forward_with_no_observations(self):
        net = surprise_net()
        for name in net.names:
            assert posterior(net, name).approx_eq(forward_marginal(net, name))

    def test_deterministic_chain_inverts(self):
        net = BayesNet(
            [
                root("a", 0.5),
                BinaryNode(name="b", parents=("a",), cpt={(True,): 1.0, (False,): 0.0}),
            ]
        )
        assert posterior(net, "a", {"b": True}).weight(True) == pytest.approx(1.0, abs=1e-12)

    def test_twitch_account_raises_games_belief(self):
        net = surprise_net()
        base = posterior(net, "UserLikesVideoGames").weight(True)
        bumped = posterior(net, "UserLikesVideoGames", {"HasTwitchAccount": True}).weight(True)
        assert bumped > base
        # direction confirmed against the flat joint-table oracle
        assert bumped == pytest.approx(
            oracle_marginal(net, "UserLikesVideoGames", {"HasTwitchAccount": True}), abs=1e-12
        )


class TestContradictionScore:
    def test_consistent_with_deterministic_net_scores_zero(self):
        net = BayesNet(
            [
                root("a", 1.0),
                BinaryNode(name="b", parents=("a",), cpt={(True,): 1.0, (False,): 0.0}),
            ]
        )
        assert contradiction_score(net, {"a": True, "b": True}) == pytest.approx(0.0, abs=1e-12)

    def test_single_root_observation(self):
        net = surprise_net()
        assert contradiction_score(net, {"IsYoung": True}) == pytest.approx(0.5, abs=1e-12)

    def test_contradictory_games_answer_scores_higher(self):
        net = surprise_net()
        contradicted = contradiction_score(
            net, {"IsYoung": True, "HasTwitchAccount": True, "UserLikesVideoGames": False}
        )
        consistent = contradiction_score(
            net, {"IsYoung": True, "HasTwitchAccount": True, "UserLikesVideoGames": True}
        )
        assert contradicted > consistent
        expected = 1.0 - oracle_poe(
            net, {"IsYoung": True, "HasTwitchAccount": True, "UserLikesVideoGames": False}
        )
        assert contradicted == pytest.approx(expected, abs=1e-12)

    def test_impossible_evidence_scores_one(self):
        net = BayesNet(
            [
                root("a", 1.0),
                BinaryNode(name="b", parents=("a",), cpt={(True,): 1.0, (False,): 0.0}),
            ]
        )
        assert contradiction_score(net, {"b": False}) == 1.0

    def test_requires_observations(self):
        with pytest.raises(NetError):
            contradiction_score(surprise_net(), {})


class TestAgainstJointTableOracle:
    def test_randomized_nets_agree_with_oracle(self):
        rng = Random(20240817)
        checked = 0
        while checked < 30:
            net = random_net(rng)
            obs = random_observations(rng, net, max_obs=len(net.names) - 1)
            poe = oracle_poe(net, obs) if obs else 1.0
            if poe <= 0.0:
                continue
            if obs:
                assert probability_of_evidence(net, obs) == pytest.approx(
                    poe, abs=1e-9
                )
                assert contradiction_score(net, obs) == pytest.approx(
                    1.0 - poe, abs=1e-9
                )
            targets = [n for n in net.names if n not in obs]
            for target in targets:
                expected = oracle_marginal(net, target, obs)
                assert forward_marginal(net, target, obs).weight(True) == pytest.approx(
                    expected, abs=1e-9
                )
            checked += 1
