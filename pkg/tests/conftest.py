"""Shared fixtures: packaged data loaders and a ready-to-talk assistant."""

from pathlib import Path

import pytest

from transport_assistant import dialog, dispatch, intent, perception, transit, weather

FIXTURES = Path(__file__).parent.parent / "src" / "transport_assistant" / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def grammar() -> intent.Grammar:
    return intent.compile_grammar(intent.load_grammar_rules(FIXTURES / "grammar.jsonl"))


@pytest.fixture(scope="session")
def timetable() -> transit.Timetable:
    return transit.load_timetable(FIXTURES / "timetable")


@pytest.fixture(scope="session")
def replies() -> dict:
    return dialog.load_reply_strings(FIXTURES / "replies.txt")


def build_assistant(clock_ms: int = 36_000_000):
    """Assistant over the packaged fixture world with a controllable clock.

    Returns (assistant, session, advance) where advance(ms) moves the clock.
    """
    state = {"now": clock_ms}
    grammar = intent.compile_grammar(intent.load_grammar_rules(FIXTURES / "grammar.jsonl"))
    timetable = transit.load_timetable(FIXTURES / "timetable")
    weather_provider = weather.load_weather(FIXTURES / "weather.tsv")
    fleet = dispatch.load_fleet(FIXTURES / "fleet.tsv")
    dispatcher = dispatch.Dispatch(
        fleet=fleet,
        places=timetable.places,
        messages=dispatch.load_message_templates(FIXTURES / "dispatch_messages.txt"),
        clock=lambda: state["now"],
    )
    assistant = dialog.Assistant(
        grammar=grammar,
        replies=dialog.load_reply_strings(FIXTURES / "replies.txt"),
        timetable=timetable,
        weather_provider=weather_provider,
        dispatch=dispatcher,
    )
    session = dialog.Session(
        session_id="t1", position=transit.GeoPoint(39.16550, -86.52080)
    )

    def advance(ms: int) -> int:
        state["now"] += ms
        return state["now"]

    def now() -> int:
        return state["now"]

    return assistant, session, advance, now


@pytest.fixture()
def assistant_world():
    return build_assistant()
