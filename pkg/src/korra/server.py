"""HTTP service for live sessions: state snapshots, response submission, and a
server-sent-events stream of engine events.

Concurrency contract: the engine thread owns every piece of mutable state.
Request handlers never touch the engine directly; they read an immutable
snapshot published by the engine thread and submit answers through a
condition-protected mailbox. Event subscribers receive copies over queues.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Sequence

from .engine import Engine, EngineEvent
from .model import Interaction

logger = logging.getLogger(__name__)


class LiveResponseSource:
    """Blocks the engine until the user answers over HTTP or the timeout passes."""

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._pending: Interaction | None = None
        self._submitted: str | None = None
        self._closed = False

    def acquire(self, interaction: Interaction, options: Sequence[str], timeout: float) -> str | None:
        with self._cond:
            self._pending = interaction
            self._submitted = None
            self._cond.wait_for(
                lambda: self._submitted is not None or self._closed,
                timeout=None if timeout <= 0 else timeout,
            )
            answer = self._submitted
            self._pending = None
            self._submitted = None
            return answer

    def submit(self, text: str) -> tuple[bool, str | None]:
        """Deliver an answer; rejected when no question is pending (stale click)."""
        with self._cond:
            if self._pending is None:
                return False, "no pending question"
            if self._submitted is not None:
                return False, "already answered"
            self._submitted = text
            self._cond.notify_all()
            return True, None

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class EngineService:
    """Runs the engine loop on its own thread and fans events out to clients."""

    def __init__(self, engine: Engine, response_source: LiveResponseSource):
        self.engine = engine
        self.source = response_source
        self._snapshot_lock = threading.Lock()
        self._snapshot: dict = engine.snapshot()
        self._subscribers: list[queue.Queue] = []
        self._subscribers_lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        engine.subscribers.append(self._on_event)

    # engine thread ------------------------------------------------------

    def _on_event(self, event: EngineEvent) -> None:
        payload = event.to_dict()
        with self._snapshot_lock:
            self._snapshot = self.engine.snapshot()
        with self._subscribers_lock:
            subscribers = list(self._subscribers)
        for q in subscribers:
            try:
                q.put_nowait(payload)
            except queue.Full:
                pass

    def _loop(self) -> None:
        try:
            while not self._stop.is_set() and not self.engine.ended:
                self.engine.run_step()
                with self._snapshot_lock:
                    self._snapshot = self.engine.snapshot()
        except Exception:
            logger.exception("engine loop crashed")
        finally:
            with self._snapshot_lock:
                self._snapshot = self.engine.snapshot()

    # service thread -----------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, name="korra-engine", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self.source.close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def snapshot(self) -> dict:
        with self._snapshot_lock:
            return self._snapshot

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=256)
        with self._subscribers_lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._subscribers_lock:
            if q in self._subscribers:
                self._subscribers.remove(q)


def make_handler(service: EngineService, ui_dir: Path | None = None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            logger.debug("http: " + fmt, *args)

        def _send_json(self, payload: dict, status: int = 200) -> None:
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            if self.path == "/api/state":
                self._send_json(service.snapshot())
            elif self.path == "/api/events":
                self._stream_events()
            elif ui_dir is not None:
                self._serve_static()
            else:
                self._send_json({"error": "not found"}, status=404)

        def do_POST(self):
            if self.path == "/api/respond":
                self._post_respond()
            elif self.path == "/api/suggest_weights":
                self._post_suggest_weights()
            else:
                self._send_json({"error": "not found"}, status=404)

        def _post_respond(self):
            doc = self._read_json()
            if doc is None:
                return
            text = doc.get("response_label") or doc.get("free_text")
            if not isinstance(text, str) or not text.strip():
                self._send_json(
                    {"accepted": False, "reason": "response_label or free_text required"},
                    status=400,
                )
                return
            accepted, reason = service.source.submit(text)
            self._send_json({"accepted": accepted, "reason": reason})

        def _post_suggest_weights(self):
            """Advisory only: weights whose time shares would match the request."""
            from .stats import InteractionsStat, StatsError, suggest_weights

            doc = self._read_json()
            if doc is None:
                return
            shares = doc.get("desired_time_share")
            if not isinstance(shares, dict) or not shares:
                self._send_json({"error": "desired_time_share object required"}, status=400)
                return
            snapshot = service.snapshot()
            stats = InteractionsStat.from_snapshot(snapshot["stats"])
            pause_mean = service.engine.model.timing.pause_new.mean
            try:
                weights = suggest_weights(
                    {str(k): float(v) for k, v in shares.items()},
                    stats,
                    pause_mean,
                    require_observations=False,
                )
            except (StatsError, ValueError) as exc:
                self._send_json({"error": str(exc)}, status=400)
                return
            self._send_json({"suggested_weights": weights, "advisory": True})

        def _read_json(self) -> dict | None:
            length = int(self.headers.get("Content-Length", "0"))
            try:
                doc = json.loads(self.rfile.read(length) or b"{}")
            except json.JSONDecodeError:
                self._send_json({"accepted": False, "reason": "invalid JSON"}, status=400)
                return None
            if not isinstance(doc, dict):
                self._send_json({"accepted": False, "reason": "object body required"}, status=400)
                return None
            return doc

        def _stream_events(self):
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            q = service.subscribe()
            try:
                self.wfile.write(b"retry: 2000\n\n")
                self.wfile.flush()
                while True:
                    try:
                        event = q.get(timeout=15.0)
                    except queue.Empty:
                        self.wfile.write(b": keepalive\n\n")
                        self.wfile.flush()
                        continue
                    data = json.dumps(event)
                    self.wfile.write(f"data: {data}\n\n".encode())
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass
            finally:
                service.unsubscribe(q)

        def _serve_static(self):
            rel = self.path.lstrip("/") or "index.html"
            target = (ui_dir / rel).resolve()
            if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
                self._send_json({"error": "not found"}, status=404)
                return
            content = target.read_bytes()
            ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(content)))
            self.end_headers()
            self.wfile.write(content)

    return Handler


class KorraServer:
    """Bundles the engine service and the HTTP front."""

    def __init__(self, engine: Engine, *, port: int = 0, ui_dir: Path | None = None):
        if not isinstance(engine.response_source, LiveResponseSource):
            raise TypeError("live serving requires an engine built with a LiveResponseSource")
        self.source = engine.response_source
        self.service = EngineService(engine, self.source)
        handler = make_handler(self.service, ui_dir=ui_dir)
        self.httpd = ThreadingHTTPServer(("127.0.0.1", port), handler)
        self._http_thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    def start(self) -> None:
        self.service.start()
        self._http_thread = threading.Thread(
            target=self.httpd.serve_forever, name="korra-http", daemon=True
        )
        self._http_thread.start()

    def stop(self) -> None:
        self.service.stop()
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._http_thread is not None:
            self._http_thread.join(timeout=5)

    def serve_until_session_end(self) -> None:
        """Block until the engine finishes (Ctrl-C stops earlier)."""
        try:
            while self.service._thread is not None and self.service._thread.is_alive():
                self.service._thread.join(timeout=0.5)
        except KeyboardInterrupt:
            pass
