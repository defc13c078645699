"""Command-line entry point.

Subcommands:
  serve          run the HTTP gateway with the periodic tick timer
  repl           line-in/line-out conversation against an in-process service
  run-scenario   replay scenario scripts and report pass/fail
  simulate-walk  print the instruction stream for one grid walk
"""

from __future__ import annotations

import argparse
import sys

from .. import nav
from .config import GatewayConfig, load_config
from .scenario import ScriptParseError, run_scenario
from .server import run as run_server
from .service import AssistantService


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    parser.add_argument("--journal", dest="journal_path", help="session journal file")
    parser.add_argument("--tick-period", dest="tick_period_s", type=float)
    parser.add_argument("--console-dir", dest="console_dir", help="static console root")


def _build_config(args: argparse.Namespace) -> GatewayConfig:
    overrides = {
        name: getattr(args, name, None)
        for name in ("host", "port", "journal_path", "tick_period_s", "console_dir")
    }
    return load_config(file_path=args.config, overrides=overrides)


def _cmd_serve(args: argparse.Namespace) -> int:
    run_server(_build_config(args))
    return 0


def _cmd_repl(args: argparse.Namespace) -> int:
    config = _build_config(args)
    service = AssistantService(config)
    session_id = service.create_session()
    print(f"session {session_id}; type an utterance, or /help for controls")
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        if line in ("/quit", "/exit"):
            break
        try:
            events = _repl_step(service, session_id, line)
        except Exception as exc:
            print(f"error: {exc}")
            continue
        for event in events:
            print(f"[{event.kind.value}] {event.text}")
    return 0


def _repl_step(service: AssistantService, session_id: str, line: str):
    if line == "/help":
        print(
            "controls: /battery <0-100>, /frame <content_key>, /tick [n],\n"
            "          /nav <destination>, /obstacle <x> <y>, /state, /quit"
        )
        return []
    if line.startswith("/battery "):
        return service.set_battery(session_id, int(line.split()[1]))
    if line.startswith("/frame "):
        return service.ingest_frame(session_id, line.split(maxsplit=1)[1])
    if line.startswith("/tick"):
        parts = line.split()
        return service.tick(session_id, steps=int(parts[1]) if len(parts) > 1 else 1)
    if line.startswith("/nav "):
        before = service.last_seq(session_id)
        service.start_nav(session_id, line.split(maxsplit=1)[1])
        return [e.event for e in service.events_after(session_id, after=before)]
    if line.startswith("/obstacle "):
        _, x, y = line.split()
        service.inject_obstacle(session_id, (int(x), int(y)))
        return []
    if line == "/state":
        print(service.get_state(session_id))
        return []
    return service.handle_utterance(session_id, line)


def _cmd_run_scenario(args: argparse.Namespace) -> int:
    config = _build_config(args)
    failures = 0
    for script in args.scripts:
        try:
            report = run_scenario(script, config=config)
        except ScriptParseError as exc:
            print(f"scenario {script}: PARSE ERROR\n  {exc}")
            failures += 1
            continue
        print(report.format())
        if not report.passed:
            failures += 1
    return 1 if failures else 0


def _cmd_simulate_walk(args: argparse.Namespace) -> int:
    grid = nav.load_grid(args.map)
    if args.start:
        start = (args.start[0], args.start[1])
    elif "entrance" in grid.places:
        start = grid.places["entrance"]
    else:
        try:
            start = next(cell for name, cell in grid.places.items() if name != args.dest)
        except StopIteration:
            print("no start place on this map; pass --start X Y")
            return 2
    try:
        instructions = nav.run_session(
            grid, start, nav.Heading(args.heading), args.dest
        )
    except nav.NavError as exc:
        print(f"walk failed: {exc}")
        return 1
    for i, instruction in enumerate(instructions, start=1):
        print(f"{i:4d}  {instruction.text}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="transport-assistant",
        description="conversational transport assistant gateway",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP gateway")
    _add_config_args(p_serve)
    p_serve.set_defaults(func=_cmd_serve)

    p_repl = sub.add_parser("repl", help="talk to an in-process assistant")
    _add_config_args(p_repl)
    p_repl.set_defaults(func=_cmd_repl)

    p_scn = sub.add_parser("run-scenario", help="replay scenario scripts")
    _add_config_args(p_scn)
    p_scn.add_argument("scripts", nargs="+", help="scenario script files")
    p_scn.set_defaults(func=_cmd_run_scenario)

    p_walk = sub.add_parser("simulate-walk", help="print one grid walk")
    p_walk.add_argument("--map", required=True, help="map fixture file")
    p_walk.add_argument("--dest", required=True, help="destination place name")
    p_walk.add_argument("--start", nargs=2, type=int, metavar=("X", "Y"))
    p_walk.add_argument("--heading", default="North",
                        choices=[h.value for h in nav.Heading])
    p_walk.set_defaults(func=_cmd_simulate_walk)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
