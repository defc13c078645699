"""Grammar and intent parsing tests.

The corpus below is the authoritative list of utterances the assistant must
understand; each row pins the expected kind, slots, and (where it matters)
the rule that should win.
"""

import random
import string

import pytest

from transport_assistant import intent
from transport_assistant.intent import (
    DuplicateRuleId,
    DuplicateSlotName,
    GrammarRule,
    IntentKind,
    InvalidPattern,
    SlotKind,
    SlotSpec,
    Utterance,
)


# -- independent oracles ------------------------------------------------------


def oracle_hotword(text: str) -> bool:
    """Reference hotword check: 'hello' immediately followed by 'assistant'
    somewhere in the normalized token stream."""
    tokens = intent.normalize(text).split()
    return any(
        tokens[i] == "hello" and tokens[i + 1] == "assistant"
        for i in range(len(tokens) - 1)
    )


# -- normalization ------------------------------------------------------------


def test_normalize_examples():
    assert intent.normalize("Hello, Assistant!") == "hello assistant"
    assert intent.normalize("  WHICH   is\tthe next BUS?  ") == "which is the next bus"
    assert intent.normalize("don't") == "dont"
    assert intent.normalize("") == ""


def test_normalize_is_idempotent_and_clean():
    rng = random.Random(401)
    alphabet = string.ascii_letters + string.digits + string.punctuation + " \t’¿"
    for _ in range(1000):
        raw = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 40)))
        once = intent.normalize(raw)
        assert intent.normalize(once) == once
        assert once == once.lower()
        assert "  " not in once
        assert once == once.strip()


# -- hotword detection ----------------------------------------------------------


@pytest.mark.parametrize(
    "text,expected",
    [
        ("hello assistant", True),
        ("Hello Assistant!", True),
        ("oh hello assistant, are you there", True),
        ("hello there assistant", False),
        ("assistant hello", False),
        ("hello", False),
        ("", False),
        ("say hello to my assistant", False),
    ],
)
def test_hotword_cases(text, expected):
    assert intent.detect_hotword(text) is expected


def test_hotword_matches_oracle_on_random_token_streams():
    rng = random.Random(402)
    vocab = ["hello", "assistant", "there", "bus", "the", "to", "go"]
    for _ in range(2000):
        text = " ".join(rng.choice(vocab) for _ in range(rng.randrange(0, 8)))
        assert intent.detect_hotword(text) == oracle_hotword(text), text


def test_strip_hotword_prefix():
    # A bare hotword leaves an empty remainder; a non-leading hotword is None.
    assert intent.strip_hotword_prefix("hello assistant") == ""
    assert (
        intent.strip_hotword_prefix("Hello assistant, what is the weather?")
        == "what is the weather"
    )
    assert intent.strip_hotword_prefix("say hello assistant now") is None
    assert intent.strip_hotword_prefix("good morning") is None


# -- the utterance corpus -------------------------------------------------------

# (utterance, expected kind, expected slots, expected winning rule id or None)
CORPUS = [
    # waking up
    ("hello assistant", IntentKind.WAKE, {}, None),
    ("Hello Assistant!", IntentKind.WAKE, {}, None),
    ("oh, hello assistant", IntentKind.WAKE, {}, None),
    # nearest stop
    ("tell me the nearest bus stop", IntentKind.NEAREST_STOP, {}, 1),
    ("which is the nearest bus stop", IntentKind.NEAREST_STOP, {}, 2),
    ("where is the closest bus stop", IntentKind.NEAREST_STOP, {}, 3),
    ("find the nearest bus stop to me", IntentKind.NEAREST_STOP, {}, 4),
    ("what is the closest bus stop", IntentKind.NEAREST_STOP, {}, 5),
    # next bus
    (
        "which is the next bus to go to Wells Library?",
        IntentKind.NEXT_BUS,
        {"place_name": "wells library"},
        10,
    ),
    ("when is the next bus to city hall", IntentKind.NEXT_BUS, {"place_name": "city hall"}, 11),
    ("what is the next bus to college mall", IntentKind.NEXT_BUS, {"place_name": "college mall"}, 12),
    ("next bus to sample gates", IntentKind.NEXT_BUS, {"place_name": "sample gates"}, 13),
    ("which bus goes to memorial stadium", IntentKind.NEXT_BUS, {"place_name": "memorial stadium"}, 14),
    (
        "what time is the next bus to wells library",
        IntentKind.NEXT_BUS,
        {"place_name": "wells library"},
        15,
    ),
    # bus details (anaphoric and explicit)
    ("tell me details about this bus", IntentKind.BUS_DETAILS, {}, 20),
    ("tell me details about bus 6", IntentKind.BUS_DETAILS, {"route_ref": "6"}, 21),
    ("give me details about the bus", IntentKind.BUS_DETAILS, {}, 22),
    ("what are the details of this bus", IntentKind.BUS_DETAILS, {}, 23),
    ("tell me more about this bus", IntentKind.BUS_DETAILS, {}, 24),
    ("details about bus 9", IntentKind.BUS_DETAILS, {"route_ref": "9"}, 25),
    # trip duration
    ("how long would it take me to get there?", IntentKind.TRIP_DURATION, {}, 30),
    (
        "how long would it take me to get to wells library",
        IntentKind.TRIP_DURATION,
        {"place_name": "wells library"},
        31,
    ),
    (
        "how long would it take me to get to college mall by car",
        IntentKind.TRIP_DURATION,
        {"place_name": "college mall", "travel_mode": "car"},
        31,
    ),
    (
        "how long does it take to get to sample gates by walking",
        IntentKind.TRIP_DURATION,
        {"place_name": "sample gates", "travel_mode": "walk"},
        32,
    ),
    ("how long to city hall by bus", IntentKind.TRIP_DURATION, {"place_name": "city hall", "travel_mode": "bus"}, 33),
    (
        "how much time does it take to walk to sample gates",
        IntentKind.TRIP_DURATION,
        {"place_name": "sample gates", "travel_mode": "walk"},
        34,
    ),
    ("how far is memorial stadium", IntentKind.TRIP_DURATION, {"place_name": "memorial stadium"}, 35),
    # weather
    ("how is the weather outside today", IntentKind.WEATHER, {"day_offset": "0"}, 40),
    ("how is the weather outside tomorrow", IntentKind.WEATHER, {"day_offset": "1"}, 40),
    ("how is the weather", IntentKind.WEATHER, {"day_offset": "0"}, 41),
    ("what is the weather", IntentKind.WEATHER, {"day_offset": "0"}, 42),
    ("what is the weather tomorrow", IntentKind.WEATHER, {"day_offset": "1"}, 42),
    ("will it rain tomorrow", IntentKind.WEATHER, {"day_offset": "1"}, 43),
    ("whats the forecast for tomorrow", IntentKind.WEATHER, {"day_offset": "1"}, 44),
    # ride requests
    ("get me an uber to college mall", IntentKind.RIDE_REQUEST, {"place_name": "college mall"}, 50),
    ("please request a ride to city hall", IntentKind.RIDE_REQUEST, {"place_name": "city hall"}, 50),
    ("order a cab to wells library", IntentKind.RIDE_REQUEST, {"place_name": "wells library"}, 50),
    ("book a taxi to memorial stadium", IntentKind.RIDE_REQUEST, {"place_name": "memorial stadium"}, 50),
    # not understood
    ("hello there assistant", IntentKind.UNKNOWN, {}, None),
    ("sing me a song", IntentKind.UNKNOWN, {}, None),
    ("bus", IntentKind.UNKNOWN, {}, None),
    ("", IntentKind.UNKNOWN, {}, None),
]


@pytest.mark.parametrize("text,kind,slots,rule_id", CORPUS, ids=[c[0] or "<empty>" for c in CORPUS])
def test_corpus(grammar, text, kind, slots, rule_id):
    parsed = intent.parse(grammar, Utterance(text))
    assert parsed.kind is kind
    assert parsed.slots == slots
    assert parsed.matched_rule == rule_id


def test_corpus_size_is_at_least_thirty():
    assert len(CORPUS) >= 30


def test_slots_always_within_declared_specs(grammar):
    """Whatever matches, the slot dict only ever contains declared names."""
    by_id = {rule.rule_id: rule for rule in grammar.rules}
    for text, *_ in CORPUS:
        parsed = intent.parse(grammar, Utterance(text))
        if parsed.matched_rule is None:
            assert parsed.slots == {}
        else:
            declared = {spec.name for spec in by_id[parsed.matched_rule].slot_specs}
            assert set(parsed.slots) <= declared


# -- grammar compilation ----------------------------------------------------------


def _rule(rule_id=1, kind=IntentKind.WEATHER, pattern="ping", slots=(), priority=0):
    return GrammarRule(
        rule_id=rule_id,
        intent_kind=kind,
        pattern=pattern,
        slot_specs=tuple(slots),
        priority=priority,
    )


def test_compile_rejects_duplicate_rule_ids():
    with pytest.raises(DuplicateRuleId):
        intent.compile_grammar([_rule(rule_id=7), _rule(rule_id=7, pattern="pong")])


def test_compile_rejects_duplicate_slot_names():
    spec = SlotSpec(name="place_name", kind=SlotKind.PLACE_NAME)
    with pytest.raises(DuplicateSlotName):
        intent.compile_grammar(
            [_rule(pattern="go to (?P<place_name>.+)", slots=[spec, spec])]
        )


def test_compile_rejects_bad_regex():
    with pytest.raises(InvalidPattern):
        intent.compile_grammar([_rule(pattern="((broken")])


def test_compile_rejects_undeclared_capture_group():
    with pytest.raises(InvalidPattern):
        intent.compile_grammar([_rule(pattern="go to (?P<place_name>.+)", slots=[])])


def test_compile_rejects_missing_capture_group():
    spec = SlotSpec(name="place_name", kind=SlotKind.PLACE_NAME)
    with pytest.raises(InvalidPattern):
        intent.compile_grammar([_rule(pattern="go home", slots=[spec])])


def test_priority_then_rule_id_breaks_ties():
    low = _rule(rule_id=1, kind=IntentKind.WEATHER, pattern="status", priority=1)
    high = _rule(rule_id=2, kind=IntentKind.NEAREST_STOP, pattern="status", priority=5)
    grammar = intent.compile_grammar([low, high])
    assert intent.parse(grammar, Utterance("status")).matched_rule == 2

    twin_a = _rule(rule_id=3, kind=IntentKind.WEATHER, pattern="status", priority=5)
    twin_b = _rule(rule_id=9, kind=IntentKind.NEAREST_STOP, pattern="status", priority=5)
    grammar = intent.compile_grammar([twin_b, twin_a])
    assert intent.parse(grammar, Utterance("status")).matched_rule == 3


def test_rules_match_whole_utterance_only(grammar):
    # A trailing clause keeps the rule from matching; this is not a prefix scan.
    parsed = intent.parse(grammar, Utterance("tell me the nearest bus stop and sing"))
    assert parsed.kind is IntentKind.UNKNOWN


def test_day_offset_defaults_to_today():
    spec = SlotSpec(name="day_offset", kind=SlotKind.DAY_OFFSET)
    rule = _rule(pattern="forecast( (?P<day_offset>today|tomorrow))?", slots=[spec])
    grammar = intent.compile_grammar([rule])
    assert intent.parse(grammar, Utterance("forecast")).slots == {"day_offset": "0"}
    assert intent.parse(grammar, Utterance("forecast tomorrow")).slots == {"day_offset": "1"}


def test_travel_mode_words_normalize():
    spec_place = SlotSpec(name="place_name", kind=SlotKind.PLACE_NAME)
    spec_mode = SlotSpec(name="travel_mode", kind=SlotKind.TRAVEL_MODE)
    rule = _rule(
        pattern="go to (?P<place_name>.+) by (?P<travel_mode>\\w+)",
        slots=[spec_place, spec_mode],
    )
    grammar = intent.compile_grammar([rule])
    for word, mode in [
        ("walking", "walk"),
        ("foot", "walk"),
        ("walk", "walk"),
        ("driving", "car"),
        ("drive", "car"),
        ("car", "car"),
        ("bus", "bus"),
    ]:
        parsed = intent.parse(grammar, Utterance(f"go to quad by {word}"))
        assert parsed.slots["travel_mode"] == mode, word


def test_load_grammar_rules_skips_comments(tmp_path):
    path = tmp_path / "g.jsonl"
    path.write_text(
        "# comment line\n"
        '{"rule_id": 1, "intent_kind": "Weather", "priority": 0, "pattern": "ping"}\n'
        "\n"
    )
    rules = intent.load_grammar_rules(path)
    assert len(rules) == 1 and rules[0].intent_kind is IntentKind.WEATHER


def test_packaged_grammar_compiles_and_has_unique_ids(grammar):
    ids = [rule.rule_id for rule in grammar.rules]
    assert len(ids) == len(set(ids))
    assert len(ids) >= 25
