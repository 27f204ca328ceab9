from __future__ import annotations

import math

import pytest

from korra.demo import demo_model
from korra.engine import (
    AlwaysPositivePolicy,
    Engine,
    ScriptedPolicy,
    SilentPolicy,
    UniformRandomPolicy,
    VirtualClock,
    build_replay_policy,
    simulate,
)
from korra.model import model_from_dict
from korra.session import fresh_session


@pytest.fixture(scope="module")
def joi():
    return demo_model()


def movie_model():
    """Tiny model built around the watched-a-movie scenario."""
    return model_from_dict(
        {
            "categories": [
                {"name": "MakeSuggestion", "weight": 0.375},
                {"name": "Questions", "weight": 0.375},
                {"name": "Filler", "weight": 0.25},
            ],
            "interactions": [
                {"id": "sugg_a", "category": "MakeSuggestion", "kind": "suggestion",
                 "text": "Watch Shameless.", "repeatable": True},
                {"id": "sugg_b", "category": "MakeSuggestion", "kind": "suggestion",
                 "text": "Go to the gym.", "repeatable": True},
                {"id": "ask_watched_movie", "category": "Questions", "kind": "pure_fact_about_user",
                 "text": "Have you watched a movie today?", "repeatable": True,
                 "responses": [
                     {"label": "Yes", "polarity": "positive"},
                     {"label": "No", "polarity": "negative"},
                 ]},
                {"id": "filler_a", "category": "Filler", "kind": "statement",
                 "text": "Nice weather.", "repeatable": True},
            ],
            "triggers": [
                {"id": "mut_movie", "type": "update",
                 "watch": {"fact": "ask_watched_movie", "polarity": "positive"},
                 "edits": [{"category": "MakeSuggestion", "multiply": 0.5}],
                 "resample": True}
            ],
        }
    )


def surprise_model():
    return model_from_dict(
        {
            "categories": [
                {"name": "Questions", "weight": 1.0},
                {"name": "Feelings", "weight": 0.0},
            ],
            "variables": [{"name": "Mood", "strategy": "fixed_values"}],
            "interactions": [
                {"id": "ask_age", "category": "Questions", "kind": "pure_fact_about_user",
                 "text": "How old are you?",
                 "responses": [
                     {"label": "Under 30", "polarity": "positive", "observe_value": True},
                     {"label": "30 or older", "polarity": "positive", "observe_value": False},
                 ],
                 "observes": {"net": "surprise", "node": "IsYoung"}},
                {"id": "ask_twitch", "category": "Questions", "kind": "pure_fact_about_user",
                 "text": "Do you have a Twitch account?",
                 "responses": [
                     {"label": "Yes", "polarity": "positive"},
                     {"label": "No", "polarity": "negative"},
                 ],
                 "observes": {"net": "surprise", "node": "HasTwitchAccount"}},
                {"id": "ask_games", "category": "Questions", "kind": "pure_fact_about_user",
                 "text": "Do you like video games?",
                 "responses": [
                     {"label": "Yes", "polarity": "positive"},
                     {"label": "No", "polarity": "negative"},
                 ],
                 "observes": {"net": "surprise", "node": "UserLikesVideoGames"}},
                {"id": "small_talk", "category": "Questions", "kind": "statement",
                 "text": "Lovely day.", "repeatable": True},
            ],
            "nets": [
                {"name": "surprise", "nodes": [
                    {"name": "IsYoung", "prior": 0.5},
                    {"name": "HasTwitchAccount", "prior": 0.5},
                    {"name": "UserLikesVideoGames", "parents": ["IsYoung", "HasTwitchAccount"],
                     "cpt": {"TT": 0.9, "TF": 0.6, "FT": 0.7, "FF": 0.2}},
                ]},
            ],
            "triggers": [
                {"id": "met_surprise", "type": "evaluate", "net": "surprise", "threshold": 0.85,
                 "interaction": {"category": "Feelings", "text": "Wait, really?!"}}
            ],
        }
    )


def run_engine(model, *, seed=7, policy=None, steps=50, timing=True, max_virtual=None):
    session = fresh_session(model, seed)
    engine = Engine(
        model,
        session,
        seed=seed,
        policy=policy or SilentPolicy(),
        timing_enabled=timing,
    )
    for _ in range(steps):
        if engine.ended:
            break
        if max_virtual is not None and engine.now() >= max_virtual:
            break
        engine.run_step()
    return engine


class TestStepBasics:
    def test_question_answered_updates_variable_and_reacts(self, joi):
        # AlwaysPositive picks the first positive option ("Fine", mapped to 0.7)
        session = fresh_session(joi, 5)
        engine = Engine(joi, session, seed=5, policy=AlwaysPositivePolicy())
        for _ in range(200):
            engine.run_step()
            if session.variables["InAGoodMood"].current is not None:
                break
        else:
            pytest.fail("mood question never asked")
        assert session.variables["InAGoodMood"].current == 0.7
        body = engine.log.body()
        assert "InAGoodMood: unset -> 0.7" in body
        assert "Glad to hear that!" in body  # reaction after pause_react

    def test_timeout_moves_on(self):
        model = movie_model()
        engine = run_engine(model, policy=SilentPolicy(), steps=12)
        body = engine.log.body()
        assert "(no response)" in body
        assert engine.report.interactions_executed >= 10

    def test_unparsed_input_reasks_once_then_abandons(self):
        model = movie_model()
        script = ScriptedPolicy(["garbage", "more garbage"] * 20)
        engine = run_engine(model, policy=script, steps=20)
        body = engine.log.body()
        assert 'unparsed input "garbage"' in body
        assert "(abandoned)" in body

    def test_liveness_with_silent_policy(self):
        model = movie_model()
        engine = run_engine(model, policy=SilentPolicy(), steps=30)
        assert engine.report.interactions_executed == 30
        assert not engine.ended


class TestMovieScenario:
    def test_positive_answer_halves_pre_normalization_weight(self):
        model = movie_model()
        session = fresh_session(model, 11)
        engine = Engine(model, session, seed=11, policy=AlwaysPositivePolicy())
        assert session.category_weights["MakeSuggestion"] == 0.375
        for _ in range(60):
            engine.run_step()
            if "ask_watched_movie" in session.user_facts:
                break
        else:
            pytest.fail("movie question never asked")
        assert session.category_weights["MakeSuggestion"] == 0.1875
        body = engine.log.body()
        assert "mut_movie" in body
        assert body.index("trigger_fired mut_movie") < body.rindex("queue_snapshot")

    def test_resample_preserves_executed_prefix(self):
        model = movie_model()
        session = fresh_session(model, 11)
        engine = Engine(model, session, seed=11, policy=AlwaysPositivePolicy())
        executed_before = None
        for _ in range(60):
            engine.run_step()
            if "ask_watched_movie" in session.user_facts:
                executed_before = engine.queue.executed_total
                break
        assert executed_before is not None
        # history in the log is never rewritten: utterance lines accumulated
        utterances = [l for l in engine.log.body().splitlines() if "] utterance" in l]
        assert len(utterances) >= executed_before


class TestSurpriseScenario:
    def test_contradiction_injects_surprise_at_head_with_cue(self):
        model = surprise_model()
        session = fresh_session(model, 3)
        script = {
            "ask_age": "Under 30",
            "ask_twitch": "Yes",
            "ask_games": "No",
        }

        class MappedPolicy:
            def answer(self, interaction, options, rng):
                return script.get(interaction.id)

        engine = Engine(model, session, seed=3, policy=MappedPolicy())
        injected_event = None
        for _ in range(40):
            events = engine.run_step()
            for event in events:
                if event.kind == "nonverbal" and event.payload["cue"] == "surprise_face":
                    injected_event = event
            if injected_event:
                break
        assert injected_event is not None, "surprise never fired"
        assert engine.queue.current().interaction_id.startswith("injected_met_surprise")
        body = engine.log.body()
        assert "surprise_face" in body
        assert "injected injected_met_surprise" in body
        # the injected utterance precedes all previously queued items
        next_events = engine.run_step()
        utterances = [e for e in next_events if e.kind == "utterance"]
        assert utterances and utterances[0].payload["text"] == "Wait, really?!"

    def test_consistent_answers_never_surprise(self):
        model = surprise_model()
        session = fresh_session(model, 3)
        script = {"ask_age": "Under 30", "ask_twitch": "Yes", "ask_games": "Yes"}

        class MappedPolicy:
            def answer(self, interaction, options, rng):
                return script.get(interaction.id)

        engine = Engine(model, session, seed=3, policy=MappedPolicy())
        for _ in range(40):
            engine.run_step()
        assert "surprise_face" not in engine.log.body()


class TestTimeTriggers:
    def test_intro_phase_reduction_fires_once(self, joi):
        session = fresh_session(joi, 21)
        engine = Engine(joi, session, seed=21, policy=SilentPolicy())
        before = session.category_weights["SharePureFactInfoAboutBot"]
        while engine.now() < 700 and not engine.ended:
            engine.run_step()
        after = session.category_weights["SharePureFactInfoAboutBot"]
        assert after == pytest.approx(before * 0.3)
        firings = engine.log.body().count("trigger_fired mut_intro_phase_over")
        assert firings == 1


class TestDeterminism:
    def test_same_seed_same_script_byte_identical(self, joi):
        bodies = []
        for _ in range(2):
            log, _ = simulate(joi, AlwaysPositivePolicy(), duration_s=600, seed=42, speed=1000)
            bodies.append(log.body())
        assert bodies[0] == bodies[1]

    def test_different_seeds_differ(self, joi):
        log1, _ = simulate(joi, "silent", duration_s=300, seed=1, speed=1000)
        log2, _ = simulate(joi, "silent", duration_s=300, seed=2, speed=1000)
        assert log1.body() != log2.body()

    def test_timing_draws_do_not_disturb_content(self, joi):
        def content_sequence(timing_enabled):
            log, _ = simulate(
                joi,
                AlwaysPositivePolicy(),
                duration_s=400 if timing_enabled else 0.0,
                seed=9,
                speed=1000,
                timing_enabled=timing_enabled,
                max_steps=60,
            )
            return [
                line.split("] utterance ", 1)[1]
                for line in log.body().splitlines()
                if "] utterance " in line
            ]

        with_timing = content_sequence(True)
        without_timing = content_sequence(False)
        assert with_timing[: len(without_timing)] == without_timing[: len(with_timing)]

    def test_replay_reproduces_session(self, joi):
        log, _ = simulate(joi, UniformRandomPolicy(), duration_s=500, seed=77, speed=1000)
        replay = build_replay_policy(log.body(), joi)
        log2, _ = simulate(joi, replay, duration_s=500, seed=77, speed=1000)
        assert log.body() == log2.body()


class TestNonverbals:
    def test_smiles_and_gazes_emitted_in_order(self, joi):
        session = fresh_session(joi, 13)
        engine = Engine(joi, session, seed=13, policy=SilentPolicy())
        while engine.now() < 120:
            engine.run_step()
        body_lines = [l for l in engine.log.body().splitlines() if "nonverbal_cue" in l]
        assert any("smile" in l for l in body_lines)
        assert any("gaze_away" in l for l in body_lines)
        # timestamps non-decreasing across the whole log
        stamps = [e.at for e in engine.log.events]
        assert all(a <= b for a, b in zip(stamps, stamps[1:]))

    def test_no_nonverbals_when_timing_disabled(self, joi):
        engine = run_engine(joi, seed=4, steps=15, timing=False)
        assert "nonverbal_cue" not in engine.log.body()


class TestQueueMaintenance:
    def test_queue_stays_within_bounds(self, joi):
        session = fresh_session(joi, 31)
        engine = Engine(joi, session, seed=31, policy=AlwaysPositivePolicy(), queue_max=32)
        for _ in range(120):
            engine.run_step()
        assert engine.queue.peak_pending <= 32
        assert engine.report.peak_queue_length <= 32

    def test_greeting_first_and_grouping(self, joi):
        session = fresh_session(joi, 2)
        engine = Engine(joi, session, seed=2, policy=SilentPolicy())
        engine.start()
        lines = engine.queue_lines()
        assert lines[0] == "1. Hi"
        texts = [l.split(". ", 1)[1] for l in lines]
        if "What is your name?" in texts and "My name is Joi." in texts:
            ask_index = texts.index("What is your name?")
            assert texts[ask_index + 1] == "My name is Joi."

    def test_content_exhaustion_ends_session(self):
        model = model_from_dict(
            {
                "categories": [{"name": "Only", "weight": 1.0}],
                "interactions": [
                    {"id": "one", "category": "Only", "kind": "statement", "text": "Hello."},
                    {"id": "two", "category": "Only", "kind": "statement", "text": "Goodbye."},
                ],
            }
        )
        engine = run_engine(model, seed=1, steps=10)
        assert engine.ended
        assert engine.report.interactions_executed == 2
        assert "session end" in engine.log.body()


class TestSimulateReport:
    def test_report_counts(self, joi):
        log, report = simulate(joi, "always_positive", duration_s=900, seed=55, speed=1000)
        assert report.interactions_executed > 0
        assert sum(report.per_category.values()) == report.interactions_executed
        assert report.peak_queue_length <= 32
        assert report.virtual_duration >= 900 or report.ended_early

    def test_unknown_policy_rejected(self, joi):
        with pytest.raises(ValueError):
            simulate(joi, "chaotic", duration_s=10, seed=1)
