from __future__ import annotations

import json
import math

import pytest

from korra.demo import demo_model
from korra.prob import RngStream
from korra.session import (
    FactAnswer,
    LogError,
    SessionLog,
    SessionState,
    StoreError,
    fresh_session,
    persist,
    startup,
)


@pytest.fixture(scope="module")
def joi():
    return demo_model()


class TestStartup:
    def test_first_run_everything_unused(self, joi, tmp_path):
        state = startup(joi, tmp_path / "store.json", seed=1, now=1000.0)
        assert all(not u.used for u in state.usage.values())
        assert state.category_weights == joi.base_weights()

    def test_missing_store_is_fine(self, joi, tmp_path):
        state = startup(joi, tmp_path / "absent.json", seed=1, now=0.0)
        assert state.user_name is None

    def test_corrupt_store_gives_recovery_hint(self, joi, tmp_path):
        store = tmp_path / "store.json"
        store.write_text("{broken")
        with pytest.raises(StoreError, match="start fresh"):
            startup(joi, store, seed=1)

    def test_recently_used_never_reset(self, joi, tmp_path):
        store = tmp_path / "store.json"
        state = startup(joi, store, seed=3, now=5000.0)
        state.mark_used("intro_bot_age", answered=False, at=0.0)
        persist(state, store)
        again = startup(joi, store, seed=3, now=5000.0)  # zero elapsed
        assert again.usage_of("intro_bot_age").used

    def test_ancient_use_is_reset_with_high_probability(self, joi, tmp_path):
        store = tmp_path / "store.json"
        tau = joi.tuning.reuse_tau
        resets = 0
        for seed in range(40):
            state = startup(joi, store, seed=seed, now=0.0)
            state.mark_used("intro_bot_age", answered=False, at=0.0)
            persist(state, store)
            again = startup(joi, store, seed=seed, now=10 * tau)
            if not again.usage_of("intro_bot_age").used:
                resets += 1
        # reuse probability at 10*tau is 1 - e^-10 ~ 0.99995
        assert resets >= 39

    def test_repeatable_interactions_skip_forgetfulness(self, joi, tmp_path):
        store = tmp_path / "store.json"
        state = startup(joi, store, seed=5, now=0.0)
        state.mark_used("ask_mood", answered=True, at=0.0)
        persist(state, store)
        again = startup(joi, store, seed=5, now=10 * joi.tuning.reuse_tau)
        # repeatable questions stay marked; eligibility never depended on it
        assert again.usage_of("ask_mood").used

    def test_forgetfulness_deterministic_given_stream(self, joi, tmp_path):
        store = tmp_path / "store.json"
        state = startup(joi, store, seed=9, now=0.0)
        for interaction_id in ("intro_bot_age", "intro_bot_music", "ask_pets"):
            state.mark_used(interaction_id, answered=False, at=0.0)
        persist(state, store)
        flags1 = {
            i: startup(joi, store, seed=9, now=joi.tuning.reuse_tau).usage_of(i).used
            for i in ("intro_bot_age", "intro_bot_music", "ask_pets")
        }
        flags2 = {
            i: startup(joi, store, seed=9, now=joi.tuning.reuse_tau).usage_of(i).used
            for i in ("intro_bot_age", "intro_bot_music", "ask_pets")
        }
        assert flags1 == flags2


class TestPersistRoundTrip:
    def test_round_trip_restores_state(self, joi, tmp_path):
        store = tmp_path / "store.json"
        state = startup(joi, store, seed=2, now=100.0)
        state.mark_used("intro_bot_age", answered=False, at=3.0)
        state.user_facts["ask_games"] = FactAnswer(label="Yes", polarity="positive", at=9.0)
        state.record_observation("surprise", "UserLikesVideoGames", True)
        var = state.variables["InAGoodMood"]
        state.variables["InAGoodMood"] = type(var)(
            name=var.name, strategy=var.strategy, current=0.9
        )
        state.user_name = "Alex"
        state.stats.record_execution("MakeSuggestion", 4.2)
        persist(state, store)

        # infinite tau disables forgetfulness so the restore is exact
        from dataclasses import replace as dc_replace
        frozen_model = dc_replace(joi, tuning=dc_replace(joi.tuning, reuse_tau=math.inf))
        again = startup(frozen_model, store, seed=2, now=1e9)
        assert again.usage_of("intro_bot_age").used
        assert again.user_facts["ask_games"].label == "Yes"
        assert again.observations["surprise"]["UserLikesVideoGames"] is True
        assert again.variables["InAGoodMood"].current == 0.9
        assert again.user_name == "Alex"
        assert again.stats.per_category["MakeSuggestion"].count == 1

    def test_persist_idempotent(self, joi, tmp_path):
        store = tmp_path / "store.json"
        state = startup(joi, store, seed=2, now=0.0)
        state.mark_used("ask_pets", answered=True, at=1.0)
        persist(state, store)
        first = store.read_text()
        persist(state, store)
        assert store.read_text() == first

    def test_variable_change_survives(self, joi, tmp_path):
        store = tmp_path / "store.json"
        state = startup(joi, store, seed=2, now=0.0)
        var = state.variables["Tired"]
        state.variables["Tired"] = type(var)(
            name=var.name, strategy=var.strategy, current=0.7, initial=var.initial
        )
        persist(state, store)
        again = startup(joi, store, seed=2, now=0.0)
        assert again.variables["Tired"].current == 0.7


class TestSessionLog:
    def test_histogram_block_format(self):
        log = SessionLog()
        log.histogram_block(0.0, "MakeSuggestion 37.5% #####\nMakeJoke 10% #")
        body = log.body()
        assert "[0.000] histogram" in body
        assert "***** BEGIN Regenerating interactions *****" in body
        assert "Histogram:\nMakeSuggestion 37.5% #####" in body

    def test_queue_block_format(self):
        log = SessionLog()
        log.queue_block(0.0, ["1. Hi", "2. What is your name?"])
        assert "Interactions queue:\n1. Hi\n2. What is your name?" in log.body()

    def test_single_line_events_inline(self):
        log = SessionLog()
        log.append(12.5, "variable_change", "InAGoodMood: 0.5 -> 0.9")
        assert "[12.500] variable_change InAGoodMood: 0.5 -> 0.9" in log.body()

    def test_timestamps_must_not_decrease(self):
        log = SessionLog()
        log.append(5.0, "note", "a")
        with pytest.raises(LogError):
            log.append(4.0, "note", "b")

    def test_unknown_kind_rejected(self):
        with pytest.raises(LogError):
            SessionLog().append(0.0, "telemetry", "x")

    def test_header_excluded_from_body(self):
        log = SessionLog(header=["started 2026-08-08T13:00:00Z"])
        log.append(0.0, "note", "session begins")
        assert "started" in log.render()
        assert "started" not in log.body()


class TestInjectedInteractions:
    def test_registration_creates_unique_ids(self, joi):
        state = fresh_session(joi, 1)
        from korra.model import Interaction

        template = Interaction(
            id="surprise", category="ExpressMentalState", kind="state_expression", text="Oh!"
        )
        first = state.register_injected(template)
        second = state.register_injected(template)
        assert first.id != second.id
        assert state.find_interaction(joi, first.id).text == "Oh!"
