"""Scripted end-to-end replays against a fresh in-process service.

A scenario script is a line-oriented step list. Action steps feed the
service and queue whatever it speaks; expectation steps consume that queue
in order. The run clock starts at 10:00:00 local (36,000,000 ms) and moves
only via advance-clock, so every scripted answer is reproducible.

Step kinds ('#' starts a comment):
  say <text>
  inject-frame <content_key>
  set-battery <level>
  tick [n]
  nav-start <destination place>
  inject-obstacle <x> <y>
  advance-clock <milliseconds>
  expect-event <Kind> <exact text>
  expect-contains <Kind> <text fragment>
  expect-no-events
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..dialog import SpeechEvent
from .config import GatewayConfig
from .service import AssistantService


BASE_CLOCK_MS = 36_000_000  # 10:00:00 local time

EVENT_KINDS = {"Reply", "Alert", "NavInstruction", "Message"}

ACTION_OPS = {
    "say", "inject-frame", "set-battery", "tick", "nav-start",
    "inject-obstacle", "advance-clock",
}
EXPECT_OPS = {"expect-event", "expect-contains", "expect-no-events"}


class ScriptParseError(ValueError):
    pass


class ExpectationFailed(AssertionError):
    pass


@dataclass(frozen=True)
class Step:
    line_no: int
    op: str
    arg: str


@dataclass(frozen=True)
class StepOutcome:
    step: Step
    ok: bool
    detail: str = ""


@dataclass
class ScenarioReport:
    script: str
    outcomes: list[StepOutcome] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(o.ok for o in self.outcomes)

    def format(self) -> str:
        lines = [f"scenario {self.script}: {'PASS' if self.passed else 'FAIL'}"]
        for o in self.outcomes:
            mark = "ok  " if o.ok else "FAIL"
            line = f"  {mark} line {o.step.line_no}: {o.step.op} {o.step.arg}".rstrip()
            if o.detail:
                line += f"\n       {o.detail}"
            lines.append(line)
        return "\n".join(lines)


def parse_script(path: str | Path) -> list[Step]:
    steps: list[Step] = []
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        op, _, arg = line.partition(" ")
        arg = arg.strip()
        if op not in ACTION_OPS | EXPECT_OPS:
            raise ScriptParseError(f"{path}:{line_no}: unknown step {op!r}")
        if op in ("say", "inject-frame", "nav-start") and not arg:
            raise ScriptParseError(f"{path}:{line_no}: {op} needs an argument")
        if op == "set-battery" or op == "advance-clock":
            if not arg.lstrip("-").isdigit():
                raise ScriptParseError(f"{path}:{line_no}: {op} needs an integer")
        if op == "tick" and arg and not arg.isdigit():
            raise ScriptParseError(f"{path}:{line_no}: tick takes an optional count")
        if op == "inject-obstacle":
            parts = arg.split()
            if len(parts) != 2 or not all(p.lstrip("-").isdigit() for p in parts):
                raise ScriptParseError(f"{path}:{line_no}: inject-obstacle needs x y")
        if op in ("expect-event", "expect-contains"):
            kind = arg.split(" ", 1)[0]
            if kind not in EVENT_KINDS or " " not in arg:
                raise ScriptParseError(
                    f"{path}:{line_no}: {op} needs a kind in {sorted(EVENT_KINDS)} and text"
                )
        if op == "expect-no-events" and arg:
            raise ScriptParseError(f"{path}:{line_no}: expect-no-events takes no argument")
        steps.append(Step(line_no=line_no, op=op, arg=arg))
    return steps


class _Run:
    def __init__(self, config: GatewayConfig):
        self.now = BASE_CLOCK_MS
        # A scripted run never persists: the service is throwaway.
        self.service = AssistantService(config, clock=lambda: self.now)
        self.session_id = self.service.create_session()
        self.pending: deque[SpeechEvent] = deque()

    def apply(self, step: Step) -> None:
        service, sid = self.service, self.session_id
        if step.op == "say":
            self.pending.extend(service.handle_utterance(sid, step.arg))
        elif step.op == "inject-frame":
            self.pending.extend(service.ingest_frame(sid, step.arg))
        elif step.op == "set-battery":
            self.pending.extend(service.set_battery(sid, int(step.arg)))
        elif step.op == "tick":
            self.pending.extend(service.tick(sid, steps=int(step.arg or "1")))
        elif step.op == "nav-start":
            before = service.last_seq(sid)
            service.start_nav(sid, step.arg)
            for envelope in service.events_after(sid, after=before):
                self.pending.append(envelope.event)
        elif step.op == "inject-obstacle":
            x, y = step.arg.split()
            service.inject_obstacle(sid, (int(x), int(y)))
        elif step.op == "advance-clock":
            self.now += int(step.arg)

    def check(self, step: Step) -> None:
        if step.op == "expect-no-events":
            if self.pending:
                nxt = self.pending[0]
                raise ExpectationFailed(
                    f"expected no events, next is [{nxt.kind.value}] {nxt.text!r}"
                )
            return
        kind, _, text = step.arg.partition(" ")
        if not self.pending:
            raise ExpectationFailed(f"expected [{kind}] {text!r}, no events pending")
        event = self.pending.popleft()
        if event.kind.value != kind:
            raise ExpectationFailed(
                f"expected kind {kind}, got [{event.kind.value}] {event.text!r}"
            )
        if step.op == "expect-event" and event.text != text:
            raise ExpectationFailed(f"expected {text!r}, got {event.text!r}")
        if step.op == "expect-contains" and text not in event.text:
            raise ExpectationFailed(f"expected fragment {text!r}, got {event.text!r}")


def run_scenario(path: str | Path, config: GatewayConfig | None = None) -> ScenarioReport:
    """Replay one script against a fresh service; stops at the first mismatch."""
    path = Path(path)
    steps = parse_script(path)
    config = replace(config, journal_path="") if config else GatewayConfig()
    run = _Run(config)
    report = ScenarioReport(script=path.name)
    for step in steps:
        try:
            if step.op in ACTION_OPS:
                run.apply(step)
            else:
                run.check(step)
        except ExpectationFailed as exc:
            report.outcomes.append(StepOutcome(step=step, ok=False, detail=str(exc)))
            return report
        report.outcomes.append(StepOutcome(step=step, ok=True))
    return report
