"""Command-line entry points: run a live session, simulate one headless, or
summarize a session log."""

from __future__ import annotations

import argparse
import json
import re
import sys
import threading
from collections import Counter
from datetime import datetime
from pathlib import Path

from .engine import (
    POLICIES,
    Engine,
    ScriptedPolicy,
    simulate,
)
from .model import load_model
from .server import KorraServer, LiveResponseSource
from .session import persist, startup


def _store_file(store_dir: str | None) -> Path | None:
    if store_dir is None:
        return None
    directory = Path(store_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory / "session_state.json"


def _open_session_log(store_dir: str | None):
    if store_dir is None:
        return None
    stamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return (Path(store_dir) / f"session_{stamp}.log").open("a", encoding="utf-8")


def _policy_from_arg(arg: str):
    if arg in POLICIES:
        return POLICIES[arg]()
    path = Path(arg)
    if path.exists():
        entries = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(entries, list):
            raise SystemExit(f"script file {path} must hold a JSON list of answers")
        return ScriptedPolicy(entries)
    raise SystemExit(
        f"unknown policy {arg!r}; use one of {sorted(POLICIES)} or a script file path"
    )


def cmd_run(args: argparse.Namespace) -> int:
    from .engine import WallClock

    model = load_model(args.model)
    store = _store_file(args.store)
    session = startup(model, store, seed=args.seed)
    source = LiveResponseSource()
    engine = Engine(
        model,
        session,
        seed=args.seed,
        clock=WallClock(),
        response_source=source,
    )
    sink = _open_session_log(args.store)
    if sink is not None:
        engine.log.attach_sink(sink)

    def print_events(event):
        if event.kind == "utterance":
            print(f"{model.name}: {event.payload['text']}", flush=True)
        elif event.kind == "awaiting_response":
            options = event.payload["options"]
            if options:
                print(f"  [answer within {event.payload['timeout_s']:.0f}s] "
                      + " / ".join(options), flush=True)
        elif event.kind == "nonverbal":
            print(f"  ({event.payload['cue']})", flush=True)
        elif event.kind == "session_end":
            print("(session ended: out of content)", flush=True)

    engine.subscribers.append(print_events)

    if args.serve is not None:
        server = KorraServer(engine, port=args.serve, ui_dir=args.ui and Path(args.ui))
        server.start()
        print(f"serving on http://127.0.0.1:{server.port} (Ctrl-C to stop)", flush=True)
        try:
            server.serve_until_session_end()
        finally:
            server.stop()
            if store is not None:
                persist(session, store)
            if sink is not None:
                sink.close()
        return 0

    # console mode: stdin lines answer pending questions
    def read_stdin():
        for line in sys.stdin:
            source.submit(line.strip())

    threading.Thread(target=read_stdin, daemon=True).start()
    try:
        while not engine.ended:
            engine.run_step()
    except KeyboardInterrupt:
        pass
    finally:
        source.close()
        if store is not None:
            persist(session, store)
        if sink is not None:
            sink.close()
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    policy = _policy_from_arg(args.policy)
    store = _store_file(args.store)
    log, report = simulate(
        model,
        policy,
        duration_s=args.duration,
        seed=args.seed,
        speed=args.speed,
        store=store,
    )
    if args.log_out:
        Path(args.log_out).write_text(log.render(), encoding="utf-8")
    else:
        sys.stdout.write(log.render())
    summary = {
        "interactions_executed": report.interactions_executed,
        "per_category": dict(sorted(report.per_category.items())),
        "questions_asked": report.questions_asked,
        "questions_timed_out": report.questions_timed_out,
        "depletion_events": report.depletion_events,
        "trigger_firings": report.trigger_firings,
        "peak_queue_length": report.peak_queue_length,
        "virtual_duration": round(report.virtual_duration, 3),
        "ended_early": report.ended_early,
    }
    print(json.dumps({"report": summary}, indent=2), file=sys.stderr)
    return 0


_UTTER_LINE = re.compile(r"^\[\s*(?P<at>[\d.]+)\] utterance (?P<cat>[^/]+)/(?P<id>\S+): ")


def cmd_stats(args: argparse.Namespace) -> int:
    text = Path(args.log).read_text(encoding="utf-8")
    per_category: Counter[str] = Counter()
    responses = timeouts = depletions = triggers = 0
    last_at = 0.0
    for line in text.splitlines():
        matched = _UTTER_LINE.match(line)
        if matched:
            per_category[matched.group("cat")] += 1
            last_at = float(matched.group("at"))
            continue
        if "] response " in line:
            if "(no response)" in line or "(abandoned)" in line:
                timeouts += 1
            else:
                responses += 1
        elif "] depletion " in line:
            depletions += 1
        elif "] trigger_fired " in line:
            triggers += 1
        stamp = re.match(r"^\[\s*([\d.]+)\]", line)
        if stamp:
            last_at = max(last_at, float(stamp.group(1)))
    total = sum(per_category.values())
    print(f"session length: {last_at:.1f}s, {total} interactions")
    for name, count in per_category.most_common():
        share = 100.0 * count / total if total else 0.0
        print(f"  {name:<32} {count:>5}  {share:5.1f}%")
    print(f"responses: {responses}, timeouts: {timeouts}")
    print(f"depleted draws: {depletions}, trigger firings: {triggers}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="korra", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a live session (optionally serving the HTTP API)")
    run.add_argument("--model", required=True, help="path to the model JSON file")
    run.add_argument("--seed", type=int, required=True, help="64-bit session seed")
    run.add_argument("--store", help="directory for session_state.json and logs")
    run.add_argument("--serve", type=int, default=None, metavar="PORT",
                     help="serve the HTTP API and event stream on this port")
    run.add_argument("--ui", help="directory of built UI assets to serve at /")
    run.set_defaults(func=cmd_run)

    sim = sub.add_parser("simulate", help="run a headless session against a synthetic user")
    sim.add_argument("--model", required=True)
    sim.add_argument("--policy", required=True,
                     help=f"one of {sorted(POLICIES)} or a JSON script file")
    sim.add_argument("--duration", type=float, required=True, help="virtual seconds to run")
    sim.add_argument("--speed", type=float, default=1.0, help="wall-clock speedup factor")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--store", help="directory for session_state.json")
    sim.add_argument("--log-out", help="write the session log here instead of stdout")
    sim.set_defaults(func=cmd_simulate)

    stats = sub.add_parser("stats", help="summarize a session log")
    stats.add_argument("--log", required=True, help="path to a session log file")
    stats.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
