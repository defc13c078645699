"""Per-session conversation state machine.

A session is dormant until the hotword wakes it, then answers parsed intents
by calling the transit, weather and dispatch providers and rendering reply
templates. It also raises battery alerts on downward threshold crossings and
reads incoming messages aloud verbatim. Provider failures always become
spoken replies, never silent drops.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import dispatch as dispatch_mod
from . import intent as intent_mod
from . import transit, weather
from .intent import Grammar, IntentKind, ParsedIntent, Utterance
from .transit import GeoPoint, Timetable


DEFAULT_BATTERY_THRESHOLD = 20
DEFAULT_IDLE_TIMEOUT_MS = 60_000

REQUIRED_REPLY_KEYS = frozenset(
    {
        "wake",
        "unknown",
        "clarify_bus",
        "clarify_place",
        "battery_low",
        "nearest_stop",
        "next_bus",
        "bus_details",
        "bus_details_none",
        "trip_duration_all",
        "trip_duration_mode",
        "trip_duration_no_bus",
        "ride_requested",
        "weather",
        "err_unknown_place",
        "err_no_service",
        "err_unknown_route",
        "err_no_drivers",
    }
)


class SessionState(Enum):
    DORMANT = "Dormant"
    AWAKE = "Awake"


class SpeechKind(Enum):
    REPLY = "Reply"
    ALERT = "Alert"
    NAV_INSTRUCTION = "NavInstruction"
    MESSAGE = "Message"


class OutOfRange(ValueError):
    pass


class EmptyMessage(ValueError):
    pass


@dataclass(frozen=True)
class SpeechEvent:
    kind: SpeechKind
    text: str
    emitted_at: int
    session_id: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("speech event text must be non-empty")


@dataclass
class ConversationContext:
    last_route_id: str | None = None
    last_stop_id: str | None = None
    last_ride_id: str | None = None
    last_place: str | None = None


@dataclass
class BatteryState:
    level_percent: int = 100
    below_threshold: bool = False


@dataclass
class Session:
    session_id: str
    position: GeoPoint
    state: SessionState = SessionState.DORMANT
    last_interaction_at: int = 0
    context: ConversationContext = field(default_factory=ConversationContext)
    battery: BatteryState = field(default_factory=BatteryState)


@dataclass(frozen=True)
class NeedsClarification:
    topic: str  # "bus" or "place"


def resolve_anaphora(
    intent: ParsedIntent, context: ConversationContext
) -> ParsedIntent | NeedsClarification:
    """Fill anaphoric slots from conversation context.

    "this bus" binds to the last mentioned route; "get there" binds to the
    last asked-about place. Without context the caller must ask back.
    """
    if intent.kind is IntentKind.BUS_DETAILS and "route_ref" not in intent.slots:
        if context.last_route_id is None:
            return NeedsClarification("bus")
        slots = dict(intent.slots, route_ref=context.last_route_id)
        return ParsedIntent(kind=intent.kind, slots=slots, matched_rule=intent.matched_rule)
    if intent.kind is IntentKind.TRIP_DURATION and "place_name" not in intent.slots:
        if context.last_place is None:
            return NeedsClarification("place")
        slots = dict(intent.slots, place_name=context.last_place)
        return ParsedIntent(kind=intent.kind, slots=slots, matched_rule=intent.matched_rule)
    return intent


class Assistant:
    """Binds the grammar, providers and reply templates into one dialog loop."""

    def __init__(
        self,
        grammar: Grammar,
        replies: dict[str, str],
        timetable: Timetable,
        weather_provider: weather.WeatherProvider,
        dispatch: dispatch_mod.Dispatch,
        battery_threshold: int = DEFAULT_BATTERY_THRESHOLD,
        idle_timeout_ms: int = DEFAULT_IDLE_TIMEOUT_MS,
    ):
        missing = REQUIRED_REPLY_KEYS - replies.keys()
        if missing:
            raise ValueError(f"reply fixture missing keys: {sorted(missing)}")
        self.grammar = grammar
        self.replies = dict(replies)
        self.timetable = timetable
        self.weather_provider = weather_provider
        self.dispatch = dispatch
        self.battery_threshold = battery_threshold
        self.idle_timeout_ms = idle_timeout_ms

    # -- main entry points ----------------------------------------------------

    def handle_utterance(
        self, session: Session, utterance: Utterance, now: int
    ) -> list[SpeechEvent]:
        """Process one utterance and return the spoken events, in order.

        Dormant sessions react only to the hotword. The hotword may prefix a
        command ("hello assistant, ..."), which is answered in the same turn
        right after the wake reply.
        """
        self._expire_idle(session, now)

        if intent_mod.detect_hotword(utterance.text):
            session.state = SessionState.AWAKE
            session.last_interaction_at = now
            events = [self._reply(session, now, "wake")]
            remainder = intent_mod.strip_hotword_prefix(utterance.text)
            if remainder:
                parsed = intent_mod.parse(self.grammar, Utterance(remainder, utterance.spoken_at))
                if parsed.kind not in (IntentKind.WAKE, IntentKind.UNKNOWN):
                    events.extend(self._dispatch_intent(session, parsed, now))
            return events

        if session.state is SessionState.DORMANT:
            return []

        session.last_interaction_at = now
        parsed = intent_mod.parse(self.grammar, utterance)
        return self._dispatch_intent(session, parsed, now)

    def update_battery(self, session: Session, level: int, now: int) -> SpeechEvent | None:
        """Record a battery reading; alert once per downward threshold crossing."""
        if not isinstance(level, int) or not 0 <= level <= 100:
            raise OutOfRange(f"battery level out of range: {level!r}")
        was_below = session.battery.below_threshold
        session.battery.level_percent = level
        session.battery.below_threshold = level < self.battery_threshold
        if session.battery.below_threshold and not was_below:
            return SpeechEvent(
                kind=SpeechKind.ALERT,
                text=self.replies["battery_low"],
                emitted_at=now,
                session_id=session.session_id,
            )
        return None

    def ingest_message(self, session: Session, text: str, sender: str, now: int) -> SpeechEvent:
        """Read an incoming text message aloud, verbatim."""
        if not text:
            raise EmptyMessage(f"empty message from {sender}")
        return SpeechEvent(
            kind=SpeechKind.MESSAGE, text=text, emitted_at=now, session_id=session.session_id
        )

    # -- intent handlers --------------------------------------------------------

    def _dispatch_intent(
        self, session: Session, parsed: ParsedIntent, now: int
    ) -> list[SpeechEvent]:
        resolved = resolve_anaphora(parsed, session.context)
        if isinstance(resolved, NeedsClarification):
            key = "clarify_bus" if resolved.topic == "bus" else "clarify_place"
            return [self._reply(session, now, key)]

        kind = resolved.kind
        try:
            if kind is IntentKind.WAKE:
                return [self._reply(session, now, "wake")]
            if kind is IntentKind.NEAREST_STOP:
                return [self._answer_nearest_stop(session, now)]
            if kind is IntentKind.NEXT_BUS:
                return [self._answer_next_bus(session, resolved, now)]
            if kind is IntentKind.BUS_DETAILS:
                return [self._answer_bus_details(session, resolved, now)]
            if kind is IntentKind.TRIP_DURATION:
                return [self._answer_trip_duration(session, resolved, now)]
            if kind is IntentKind.WEATHER:
                return [self._answer_weather(session, resolved, now)]
            if kind is IntentKind.RIDE_REQUEST:
                return self._answer_ride_request(session, resolved, now)
        except transit.UnknownPlace:
            return [self._reply(session, now, "err_unknown_place")]
        except transit.UnknownRoute:
            return [self._reply(session, now, "err_unknown_route")]
        except transit.NoService:
            return [self._reply(session, now, "err_no_service")]
        except dispatch_mod.NoDriversAvailable:
            return [self._reply(session, now, "err_no_drivers")]
        return [self._reply(session, now, "unknown")]

    def _answer_nearest_stop(self, session: Session, now: int) -> SpeechEvent:
        stop, meters = transit.nearest_stop(self.timetable, session.position)
        session.context.last_stop_id = stop.stop_id
        return self._reply(session, now, "nearest_stop", stop_name=stop.name, meters=round(meters))

    def _answer_next_bus(self, session: Session, parsed: ParsedIntent, now: int) -> SpeechEvent:
        place = parsed.slots["place_name"]
        answer = transit.next_bus(
            self.timetable, session.position, place, transit.time_of_day(now)
        )
        session.context.last_route_id = answer.route_id
        session.context.last_stop_id = answer.board_stop.stop_id
        session.context.last_place = place
        return self._reply(
            session,
            now,
            "next_bus",
            place=place,
            short_name=answer.short_name,
            stop_name=answer.board_stop.name,
            wait=transit.minutes_phrase(answer.wait_seconds),
        )

    def _answer_bus_details(self, session: Session, parsed: ParsedIntent, now: int) -> SpeechEvent:
        route = self._find_route(parsed.slots["route_ref"])
        details = transit.bus_details(
            self.timetable,
            route.route_id,
            transit.time_of_day(now),
            stop_id=session.context.last_stop_id,
        )
        session.context.last_route_id = route.route_id
        if not details.next_departures:
            return self._reply(
                session,
                now,
                "bus_details_none",
                short_name=details.short_name,
                description=details.description,
                stop_name=details.stop.name,
            )
        times = ", ".join(transit.format_time_of_day(t) for t in details.next_departures)
        return self._reply(
            session,
            now,
            "bus_details",
            short_name=details.short_name,
            description=details.description,
            stop_name=details.stop.name,
            times=times,
        )

    def _answer_trip_duration(
        self, session: Session, parsed: ParsedIntent, now: int
    ) -> SpeechEvent:
        place = parsed.slots["place_name"]
        tod = transit.time_of_day(now)
        session.context.last_place = place
        mode = parsed.slots.get("travel_mode")
        if mode:
            seconds = transit.trip_duration(self.timetable, session.position, place, mode, tod)
            return self._reply(
                session,
                now,
                "trip_duration_mode",
                place=place,
                mode=mode,
                duration=transit.minutes_phrase(seconds),
            )
        walk = transit.trip_duration(self.timetable, session.position, place, "walk", tod)
        car = transit.trip_duration(self.timetable, session.position, place, "car", tod)
        try:
            bus = transit.trip_duration(self.timetable, session.position, place, "bus", tod)
        except transit.NoService:
            return self._reply(
                session,
                now,
                "trip_duration_no_bus",
                place=place,
                walk=transit.minutes_phrase(walk),
                car=transit.minutes_phrase(car),
            )
        return self._reply(
            session,
            now,
            "trip_duration_all",
            place=place,
            walk=transit.minutes_phrase(walk),
            car=transit.minutes_phrase(car),
            bus=transit.minutes_phrase(bus),
        )

    def _answer_weather(self, session: Session, parsed: ParsedIntent, now: int) -> SpeechEvent:
        offset = int(parsed.slots.get("day_offset", "0"))
        report = self.weather_provider.get_weather(offset)
        text = weather.render_weather(report, template=self.replies["weather"])
        return SpeechEvent(
            kind=SpeechKind.REPLY, text=text, emitted_at=now, session_id=session.session_id
        )

    def _answer_ride_request(
        self, session: Session, parsed: ParsedIntent, now: int
    ) -> list[SpeechEvent]:
        place = parsed.slots["place_name"]
        if place not in self.timetable.places:
            raise transit.UnknownPlace(place)
        if not self.dispatch.has_available_driver():
            raise dispatch_mod.NoDriversAvailable("no available drivers")
        ride = self.dispatch.request_ride(session.position, place, session.session_id)
        ride, messages = self.dispatch.assign_driver(ride.ride_id)
        session.context.last_ride_id = ride.ride_id
        events = [self._reply(session, now, "ride_requested", place=place)]
        for message in messages:
            if message.recipient is dispatch_mod.Recipient.RIDER:
                events.append(self.ingest_message(session, message.text, "dispatch", now))
        return events

    # -- helpers ---------------------------------------------------------------

    def _expire_idle(self, session: Session, now: int) -> None:
        if (
            session.state is SessionState.AWAKE
            and now - session.last_interaction_at >= self.idle_timeout_ms
        ):
            session.state = SessionState.DORMANT

    def _find_route(self, route_ref: str) -> transit.RouteDef:
        """Accept either a route_id or a spoken short name."""
        for route in self.timetable.routes:
            if route.route_id == route_ref or route.short_name == route_ref:
                return route
        raise transit.UnknownRoute(route_ref)

    def _reply(self, session: Session, now: int, key: str, **params) -> SpeechEvent:
        return SpeechEvent(
            kind=SpeechKind.REPLY,
            text=self.replies[key].format(**params),
            emitted_at=now,
            session_id=session.session_id,
        )


def load_reply_strings(path: str | Path) -> dict[str, str]:
    """Reply fixture: tab-separated key, template rows."""
    return {r[0]: r[1] for r in transit.read_tsv_rows(Path(path))}
