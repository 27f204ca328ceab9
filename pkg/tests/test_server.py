from __future__ import annotations

import json
import threading
import time
import urllib.request

import pytest

from korra.demo import demo_model, model_path
from korra.engine import Engine, WallClock
from korra.model import load_model
from korra.server import KorraServer, LiveResponseSource
from korra.session import fresh_session


@pytest.fixture()
def server():
    model = load_model(model_path("uitest"))
    session = fresh_session(model, 7)
    engine = Engine(
        model, session, seed=7, clock=WallClock(), response_source=LiveResponseSource()
    )
    srv = KorraServer(engine, port=0)
    srv.start()
    yield srv
    srv.stop()


def get_json(port, path):
    with urllib.request.urlopen(f"http://127.0.0.1:{port}{path}", timeout=5) as resp:
        return json.loads(resp.read())


def post_json(port, path, doc):
    req = urllib.request.Request(
        f"http://127.0.0.1:{port}{path}",
        data=json.dumps(doc).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req, timeout=5) as resp:
        return json.loads(resp.read())


def wait_for_pending_question(port, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = get_json(port, "/api/state")
        if state["pending_question"]:
            return state
        time.sleep(0.02)
    raise AssertionError("no question became pending")


class TestStateEndpoint:
    def test_state_shape(self, server):
        state = get_json(server.port, "/api/state")
        assert set(state) >= {
            "main_distribution",
            "histogram_text",
            "queue",
            "variables",
            "stats",
        }
        assert abs(sum(state["main_distribution"].values()) - 1.0) < 1e-9

    def test_unknown_path_404(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            get_json(server.port, "/api/nope")
        assert err.value.code == 404


class TestRespondEndpoint:
    def test_great_drives_mood_to_0_9(self, server):
        state = wait_for_pending_question(server.port)
        assert state["pending_question"]["options"] == ["Not so well", "Fine", "Great"]
        result = post_json(server.port, "/api/respond", {"response_label": "Great"})
        assert result["accepted"] is True
        deadline = time.time() + 5
        while time.time() < deadline:
            state = get_json(server.port, "/api/state")
            if state["variables"]["InAGoodMood"] == 0.9:
                break
            time.sleep(0.02)
        assert state["variables"]["InAGoodMood"] == 0.9

    def test_stale_response_rejected(self, server):
        wait_for_pending_question(server.port)
        first = post_json(server.port, "/api/respond", {"response_label": "Fine"})
        assert first["accepted"] is True
        # double submission: either the engine already consumed the answer
        # (no pending question) or the slot is taken
        second = post_json(server.port, "/api/respond", {"response_label": "Great"})
        assert second["accepted"] is False

    def test_empty_body_rejected(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            post_json(server.port, "/api/respond", {})
        assert err.value.code == 400


class TestSuggestWeights:
    def test_advisory_suggestion(self, server):
        result = post_json(
            server.port,
            "/api/suggest_weights",
            {"desired_time_share": {"AskUncertainFactQuestion": 0.5, "SmallTalk": 0.5}},
        )
        assert result["advisory"] is True
        weights = result["suggested_weights"]
        assert abs(sum(weights.values()) - 1.0) < 1e-9

    def test_bad_shares_rejected(self, server):
        with pytest.raises(urllib.error.HTTPError) as err:
            post_json(
                server.port,
                "/api/suggest_weights",
                {"desired_time_share": {"SmallTalk": 0.7}},
            )
        assert err.value.code == 400


class TestEventStream:
    def test_events_streamed_as_json(self, server):
        events = []
        done = threading.Event()

        def reader():
            req = urllib.request.Request(f"http://127.0.0.1:{server.port}/api/events")
            with urllib.request.urlopen(req, timeout=10) as resp:
                for raw in resp:
                    line = raw.decode().strip()
                    if line.startswith("data: "):
                        events.append(json.loads(line[6:]))
                        if len(events) >= 3:
                            done.set()
                            return

        thread = threading.Thread(target=reader, daemon=True)
        thread.start()
        assert done.wait(timeout=10), "expected at least 3 streamed events"
        kinds = {e["kind"] for e in events}
        assert kinds <= {
            "utterance",
            "awaiting_response",
            "nonverbal",
            "queue_regenerated",
            "session_end",
        }
        assert all({"at", "kind", "payload"} <= set(e) for e in events)

    def test_histogram_text_matches_engine_rendering(self, server):
        state = get_json(server.port, "/api/state")
        lines = state["histogram_text"].splitlines()
        for name, weight in state["main_distribution"].items():
            assert any(line.startswith(f"{name} ") for line in lines)
        # bar rule: round(percent / 7.5), min 1 '#'
        for line in lines:
            name, percent_s, bar = line.rsplit(" ", 2)
            percent = float(percent_s.rstrip("%"))
            expected = max(1, min(13, round(percent / 7.5)))
            assert len(bar) == expected


class TestLiveRequiresLiveSource:
    def test_policy_engine_rejected(self):
        model = demo_model()
        engine = Engine(model, fresh_session(model, 1), seed=1)
        with pytest.raises(TypeError):
            KorraServer(engine, port=0)
