"""In-process assistant service: sessions, push log, ticking and journal.

Every speech event a session produces is appended to that session's ordered
envelope log with a gap-free sequence number; push subscribers read the log,
so producers never wait on consumers. All event-producing operations for one
session run under its lock, keeping the synchronous (utterance) and
asynchronous (frame, tick, battery) paths totally ordered. If a journal path
is configured, the full service state is rewritten atomically after every
change, which is what makes kill -9 recovery exact.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .. import dispatch as dispatch_mod
from .. import intent, nav, perception, transit, weather
from ..dialog import (
    Assistant,
    BatteryState,
    ConversationContext,
    Session,
    SessionState,
    SpeechEvent,
    SpeechKind,
    load_reply_strings,
)
from ..transit import GeoPoint
from .config import GatewayConfig


JOURNAL_VERSION = 1


class UnknownSession(KeyError):
    pass


@dataclass(frozen=True)
class PushEnvelope:
    session_id: str
    sequence_number: int
    event: SpeechEvent

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "seq": self.sequence_number,
            "kind": self.event.kind.value,
            "text": self.event.text,
            "emitted_at": self.event.emitted_at,
        }


class SessionRuntime:
    """One user session plus everything the gateway tracks for it."""

    def __init__(self, session: Session):
        self.session = session
        self.lock = threading.RLock()
        self.new_events = threading.Condition(self.lock)
        self.envelopes: list[PushEnvelope] = []
        self.next_seq = 1
        self.nav_session: nav.NavSession | None = None
        self.cooldowns: dict[int, int] = {}
        self.frame_count = 0


class AssistantService:
    """Loads fixtures once and orchestrates all sessions against them."""

    def __init__(self, config: GatewayConfig, clock: Callable[[], int] | None = None):
        self.config = config
        self.clock = clock or (lambda: time.time_ns() // 1_000_000)

        self.grammar = intent.compile_grammar(intent.load_grammar_rules(config.grammar_path))
        self.replies = load_reply_strings(config.replies_path)
        self.timetable = transit.load_timetable(config.timetable_dir)
        self.weather_provider = weather.load_weather(config.weather_path)
        self.recognizer = perception.load_recognizer_table(config.recognizer_path)
        self.alert_rules = perception.load_alert_rules(config.alert_rules_path)
        self.grid = nav.load_grid(config.map_path)
        self.dispatch = dispatch_mod.Dispatch(
            fleet=dispatch_mod.load_fleet(config.fleet_path),
            places=self.timetable.places,
            messages=dispatch_mod.load_message_templates(config.dispatch_messages_path),
            clock=self.clock,
        )
        self.assistant = Assistant(
            grammar=self.grammar,
            replies=self.replies,
            timetable=self.timetable,
            weather_provider=self.weather_provider,
            dispatch=self.dispatch,
            battery_threshold=config.battery_threshold,
            idle_timeout_ms=int(config.idle_timeout_s * 1000),
        )

        self._runtimes: dict[str, SessionRuntime] = {}
        self._registry_lock = threading.RLock()
        # One writer at a time across the whole service. Per-session locks
        # order readers against that writer; taking the mutation lock first
        # everywhere makes journal snapshots deadlock-free.
        self._mutation_lock = threading.RLock()
        self._next_session = 1
        self._journal_path = Path(config.journal_path) if config.journal_path else None
        self._journal_lock = threading.Lock()
        if self._journal_path and self._journal_path.exists():
            self._restore(json.loads(self._journal_path.read_text()))

    # -- session lifecycle ---------------------------------------------------

    def create_session(self, position: GeoPoint | None = None) -> str:
        with self._mutation_lock, self._registry_lock:
            session_id = f"s{self._next_session}"
            self._next_session += 1
            session = Session(
                session_id=session_id,
                position=position
                or GeoPoint(self.config.default_lat, self.config.default_lon),
            )
            self._runtimes[session_id] = SessionRuntime(session)
        self._persist()
        return session_id

    def session_ids(self) -> list[str]:
        with self._registry_lock:
            return list(self._runtimes)

    def _runtime(self, session_id: str) -> SessionRuntime:
        with self._registry_lock:
            try:
                return self._runtimes[session_id]
            except KeyError:
                raise UnknownSession(session_id) from None

    # -- event-producing operations -------------------------------------------

    def handle_utterance(self, session_id: str, text: str) -> list[SpeechEvent]:
        rt = self._runtime(session_id)
        with self._mutation_lock, rt.lock:
            now = self.clock()
            utterance = intent.Utterance(text=text, spoken_at=now)
            events = self.assistant.handle_utterance(rt.session, utterance, now)
            return self._emit(rt, events)

    def ingest_frame(
        self, session_id: str, content_key: str, frame_id: str | None = None,
        source: str = "Injected",
    ) -> list[SpeechEvent]:
        """Classify one frame; matching rules alert (cooldown permitting),
        anything else is described aloud. Obstacle-class rules also drop an
        obstacle on the cell straight ahead of an active walker."""
        rt = self._runtime(session_id)
        with self._mutation_lock, rt.lock:
            now = self.clock()
            rt.frame_count += 1
            frame = perception.Frame(
                frame_id=frame_id or f"{session_id}-f{rt.frame_count}",
                captured_at=now,
                source=perception.FrameSource(source),
                content_key=content_key,
            )
            classification = perception.classify_frame(self.recognizer, frame)
            events = perception.evaluate_alerts(
                classification, self.alert_rules, rt.cooldowns, now, session_id
            )
            matched = [
                rule for rule in self.alert_rules
                if perception.rule_matches(rule, classification)
            ]
            if not matched:
                events = [
                    SpeechEvent(
                        kind=SpeechKind.REPLY,
                        text=perception.describe_scene(
                            classification, self.config.describe_labels
                        ),
                        emitted_at=now,
                        session_id=session_id,
                    )
                ]
            if any(rule.marks_obstacle for rule in matched):
                self._mark_obstacle_ahead(rt)
            return self._emit(rt, events)

    def set_battery(self, session_id: str, level: int) -> list[SpeechEvent]:
        rt = self._runtime(session_id)
        with self._mutation_lock, rt.lock:
            event = self.assistant.update_battery(rt.session, level, self.clock())
            return self._emit(rt, [event] if event else [])

    def start_nav(
        self,
        session_id: str,
        destination: str,
        start: nav.Cell | None = None,
        heading: str | None = None,
    ) -> dict:
        rt = self._runtime(session_id)
        with self._mutation_lock, rt.lock:
            if start is None:
                start_cell = self.grid.places[self.config.nav_start_place]
            else:
                start_cell = start
            rt.nav_session = nav.NavSession(
                grid=self.grid,
                start=tuple(start_cell),
                heading=nav.Heading(heading or self.config.nav_heading),
                destination_place=destination,
            )
            self._emit(
                rt,
                [
                    SpeechEvent(
                        kind=SpeechKind.REPLY,
                        text=self.replies["nav_started"].format(place=destination),
                        emitted_at=self.clock(),
                        session_id=session_id,
                    )
                ],
            )
            return self._nav_view(rt)

    def inject_obstacle(self, session_id: str, cell: nav.Cell) -> dict:
        rt = self._runtime(session_id)
        with self._mutation_lock, rt.lock:
            if rt.nav_session is None:
                raise ValueError("no active navigation session")
            rt.nav_session.inject_obstacle(tuple(cell))
            self._persist()
            return self._nav_view(rt)

    def cancel_ride(self, session_id: str, ride_id: str) -> dict:
        rt = self._runtime(session_id)
        with self._mutation_lock, rt.lock:
            ride = self.dispatch.get(ride_id)
            if ride.session_id != session_id:
                raise dispatch_mod.UnknownRide(ride_id)
            ride, messages = self.dispatch.cancel(ride_id)
            self._route_dispatch_messages(rt, messages)
            return self._ride_view(ride)

    def tick(self, session_id: str | None = None, steps: int = 1) -> list[SpeechEvent]:
        """Advance simulated time: one nav instruction per active walk and
        tick_period_s of driver movement per active ride, per step."""
        out: list[SpeechEvent] = []
        with self._mutation_lock:
            ids = [session_id] if session_id else self.session_ids()
            for _ in range(max(1, steps)):
                for sid in ids:
                    out.extend(self._tick_one(self._runtime(sid)))
        return out

    def _tick_one(self, rt: SessionRuntime) -> list[SpeechEvent]:
        events: list[SpeechEvent] = []
        with rt.lock:
            now = self.clock()
            session_id = rt.session.session_id
            if rt.nav_session and not rt.nav_session.done:
                try:
                    instruction = rt.nav_session.tick()
                except nav.DestinationUnreachable:
                    instruction = None
                    events.append(
                        SpeechEvent(
                            kind=SpeechKind.REPLY,
                            text=self.replies["nav_unreachable"],
                            emitted_at=now,
                            session_id=session_id,
                        )
                    )
                if instruction is not None:
                    events.append(
                        SpeechEvent(
                            kind=SpeechKind.NAV_INSTRUCTION,
                            text=instruction.text,
                            emitted_at=now,
                            session_id=session_id,
                        )
                    )
            for ride in self.dispatch.active_rides():
                if ride.session_id != session_id or ride.driver_id is None:
                    continue
                ride, messages = self.dispatch.advance(ride.ride_id, self.config.tick_period_s)
                events.extend(self._collect_rider_messages(rt, messages, now))
                if ride.state is dispatch_mod.RideState.COMPLETED:
                    rt.session.position = self.timetable.places[ride.destination_place]
            return self._emit(rt, events)

    # -- push channel -----------------------------------------------------------

    def events_after(
        self, session_id: str, after: int = 0, wait_s: float = 0.0
    ) -> list[PushEnvelope]:
        """Envelopes with sequence numbers strictly greater than `after`,
        optionally long-polling up to wait_s for the first new one."""
        rt = self._runtime(session_id)
        deadline = time.monotonic() + wait_s
        with rt.lock:
            while True:
                pending = [e for e in rt.envelopes if e.sequence_number > after]
                if pending:
                    return pending
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return []
                rt.new_events.wait(remaining)

    def last_seq(self, session_id: str) -> int:
        rt = self._runtime(session_id)
        with rt.lock:
            return rt.next_seq - 1

    # -- views -------------------------------------------------------------------

    def get_state(self, session_id: str) -> dict:
        rt = self._runtime(session_id)
        with rt.lock:
            s = rt.session
            rides = [
                self._ride_view(r)
                for r in self.dispatch.rides()
                if r.session_id == session_id
            ]
            return {
                "session_id": session_id,
                "state": s.state.value,
                "position": [s.position.lat, s.position.lon],
                "battery": {
                    "level_percent": s.battery.level_percent,
                    "below_threshold": s.battery.below_threshold,
                },
                "context": {
                    "last_route_id": s.context.last_route_id,
                    "last_stop_id": s.context.last_stop_id,
                    "last_ride_id": s.context.last_ride_id,
                    "last_place": s.context.last_place,
                },
                "last_seq": rt.next_seq - 1,
                "nav": self._nav_view(rt),
                "rides": rides,
            }

    def _nav_view(self, rt: SessionRuntime) -> dict | None:
        ns = rt.nav_session
        if ns is None:
            return None
        return {
            "map": {
                "width": self.grid.width,
                "height": self.grid.height,
                "blocked": [list(c) for c in sorted(self.grid.blocked)],
                "places": {name: list(cell) for name, cell in self.grid.places.items()},
            },
            "destination_place": ns.destination_place,
            "goal": list(ns.goal),
            "walker": {"cell": list(ns.walker.cell), "heading": ns.walker.heading.value},
            "path": [list(c) for c in ns.path],
            "discovered": [list(c) for c in sorted(ns.discovered)],
            "dynamic_blocked": [list(c) for c in sorted(ns.dynamic_blocked)],
            "done": ns.done,
        }

    def _ride_view(self, ride: dispatch_mod.Ride) -> dict:
        view = {
            "ride_id": ride.ride_id,
            "session_id": ride.session_id,
            "state": ride.state.value,
            "pickup": [ride.pickup.lat, ride.pickup.lon],
            "destination_place": ride.destination_place,
            "driver_id": ride.driver_id,
            "eta_seconds": ride.eta_seconds,
        }
        if ride.driver_id:
            for driver in self.dispatch.drivers():
                if driver.driver_id == ride.driver_id:
                    view["driver_name"] = driver.name
                    view["driver_position"] = [driver.position.lat, driver.position.lon]
        return view

    # -- internals -----------------------------------------------------------------

    def _mark_obstacle_ahead(self, rt: SessionRuntime) -> None:
        ns = rt.nav_session
        if ns is None or ns.done:
            return
        dx, dy = nav.DELTAS[ns.walker.heading]
        ahead = (ns.walker.cell[0] + dx, ns.walker.cell[1] + dy)
        if ns.grid.in_bounds(ahead):
            ns.inject_obstacle(ahead)

    def _collect_rider_messages(
        self, rt: SessionRuntime, messages: list[dispatch_mod.DispatchMessage], now: int
    ) -> list[SpeechEvent]:
        return [
            self.assistant.ingest_message(rt.session, m.text, "dispatch", now)
            for m in messages
            if m.recipient is dispatch_mod.Recipient.RIDER
        ]

    def _route_dispatch_messages(
        self, rt: SessionRuntime, messages: list[dispatch_mod.DispatchMessage]
    ) -> list[SpeechEvent]:
        return self._emit(rt, self._collect_rider_messages(rt, messages, self.clock()))

    def _emit(self, rt: SessionRuntime, events: list[SpeechEvent]) -> list[SpeechEvent]:
        """Append events to the session log, assign sequence numbers, wake
        subscribers and persist. Callers hold rt.lock."""
        for event in events:
            rt.envelopes.append(
                PushEnvelope(
                    session_id=rt.session.session_id,
                    sequence_number=rt.next_seq,
                    event=event,
                )
            )
            rt.next_seq += 1
        if events:
            rt.new_events.notify_all()
        self._persist()
        return events

    # -- journal ----------------------------------------------------------------

    def snapshot(self) -> dict:
        with self._registry_lock:
            runtimes = list(self._runtimes.values())
            sessions = []
            for rt in runtimes:
                with rt.lock:
                    s = rt.session
                    sessions.append(
                        {
                            "session_id": s.session_id,
                            "state": s.state.value,
                            "last_interaction_at": s.last_interaction_at,
                            "position": [s.position.lat, s.position.lon],
                            "battery": [s.battery.level_percent, s.battery.below_threshold],
                            "context": [
                                s.context.last_route_id,
                                s.context.last_stop_id,
                                s.context.last_ride_id,
                                s.context.last_place,
                            ],
                            "next_seq": rt.next_seq,
                            "envelopes": [
                                [
                                    e.sequence_number,
                                    e.event.kind.value,
                                    e.event.text,
                                    e.event.emitted_at,
                                ]
                                for e in rt.envelopes
                            ],
                            "cooldowns": rt.cooldowns,
                            "frame_count": rt.frame_count,
                            "nav": rt.nav_session.snapshot() if rt.nav_session else None,
                        }
                    )
            return {
                "version": JOURNAL_VERSION,
                "next_session": self._next_session,
                "sessions": sessions,
                "dispatch": self.dispatch.snapshot(),
            }

    def _persist(self) -> None:
        if self._journal_path is None:
            return
        snap = self.snapshot()
        with self._journal_lock:
            tmp = self._journal_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(snap))
            os.replace(tmp, self._journal_path)

    def _restore(self, snap: dict) -> None:
        if snap.get("version") != JOURNAL_VERSION:
            raise ValueError(f"unsupported journal version: {snap.get('version')}")
        self._next_session = snap["next_session"]
        self.dispatch.restore(snap["dispatch"])
        for record in snap["sessions"]:
            session = Session(
                session_id=record["session_id"],
                position=GeoPoint(*record["position"]),
                state=SessionState(record["state"]),
                last_interaction_at=record["last_interaction_at"],
                context=ConversationContext(*record["context"]),
                battery=BatteryState(*record["battery"]),
            )
            rt = SessionRuntime(session)
            rt.next_seq = record["next_seq"]
            rt.cooldowns = {int(k): v for k, v in record["cooldowns"].items()}
            rt.frame_count = record["frame_count"]
            rt.envelopes = [
                PushEnvelope(
                    session_id=session.session_id,
                    sequence_number=seq,
                    event=SpeechEvent(
                        kind=SpeechKind(kind),
                        text=text,
                        emitted_at=emitted_at,
                        session_id=session.session_id,
                    ),
                )
                for seq, kind, text, emitted_at in record["envelopes"]
            ]
            if record["nav"] is not None:
                rt.nav_session = nav.NavSession.from_snapshot(self.grid, record["nav"])
            self._runtimes[session.session_id] = rt
