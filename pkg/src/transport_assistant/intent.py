"""Utterance normalization, hotword detection and grammar-based intent parsing.

The assistant understands a fixed set of question families. Each family is
described by one or more regular-expression rules with named capture groups
acting as slots. New phrasings are added by appending rules to the grammar
fixture, no code changes needed.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


HOTWORD_TOKENS = ("hello", "assistant")


class IntentKind(Enum):
    WAKE = "Wake"
    NEAREST_STOP = "NearestStop"
    NEXT_BUS = "NextBus"
    BUS_DETAILS = "BusDetails"
    TRIP_DURATION = "TripDuration"
    WEATHER = "Weather"
    RIDE_REQUEST = "RideRequest"
    UNKNOWN = "Unknown"


class SlotKind(Enum):
    PLACE_NAME = "place_name"
    DAY_OFFSET = "day_offset"
    TRAVEL_MODE = "travel_mode"
    FREE_TEXT = "free_text"


class GrammarError(ValueError):
    """Base class for grammar compilation failures."""


class InvalidPattern(GrammarError):
    pass


class DuplicateSlotName(GrammarError):
    pass


class DuplicateRuleId(GrammarError):
    pass


@dataclass(frozen=True)
class Utterance:
    text: str
    spoken_at: int = 0  # milliseconds since epoch


@dataclass(frozen=True)
class SlotSpec:
    name: str
    kind: SlotKind


@dataclass(frozen=True)
class GrammarRule:
    rule_id: int
    intent_kind: IntentKind
    pattern: str
    slot_specs: tuple[SlotSpec, ...] = ()
    priority: int = 0


@dataclass(frozen=True)
class ParsedIntent:
    kind: IntentKind
    slots: dict[str, str] = field(default_factory=dict)
    matched_rule: int | None = None


@dataclass(frozen=True)
class Grammar:
    """Compiled, immutable rule set; rules kept in match order."""

    rules: tuple[GrammarRule, ...]
    _compiled: tuple[re.Pattern, ...]

    def __len__(self) -> int:
        return len(self.rules)


def normalize(text: str) -> str:
    """Lowercase, drop punctuation and collapse whitespace runs."""
    lowered = text.lower()
    stripped = "".join(
        ch for ch in lowered if not unicodedata.category(ch).startswith("P")
    )
    return " ".join(stripped.split())


def detect_hotword(text: str) -> bool:
    """True iff the normalized text contains "hello assistant" as adjacent tokens."""
    tokens = normalize(text).split()
    n = len(HOTWORD_TOKENS)
    return any(
        tuple(tokens[i : i + n]) == HOTWORD_TOKENS for i in range(len(tokens) - n + 1)
    )


def strip_hotword_prefix(text: str) -> str | None:
    """Return the command following a leading hotword, or None if text does not
    start with the hotword. The remainder may be empty ("hello assistant")."""
    tokens = normalize(text).split()
    n = len(HOTWORD_TOKENS)
    if tuple(tokens[:n]) == HOTWORD_TOKENS:
        return " ".join(tokens[n:])
    return None


def compile_grammar(rules: list[GrammarRule]) -> Grammar:
    """Validate and compile rules, ordered by (priority desc, rule_id asc)."""
    if not rules:
        raise GrammarError("grammar needs at least one rule")

    seen_ids: set[int] = set()
    for rule in rules:
        if rule.rule_id in seen_ids:
            raise DuplicateRuleId(f"rule_id {rule.rule_id} appears twice")
        seen_ids.add(rule.rule_id)
        names = [spec.name for spec in rule.slot_specs]
        if len(names) != len(set(names)):
            raise DuplicateSlotName(f"rule {rule.rule_id} repeats a slot name")

    ordered = tuple(sorted(rules, key=lambda r: (-r.priority, r.rule_id)))
    compiled = []
    for rule in ordered:
        try:
            rx = re.compile(rule.pattern)
        except re.error as exc:
            raise InvalidPattern(f"rule {rule.rule_id}: {exc}") from exc
        group_names = set(rx.groupindex)
        spec_names = {spec.name for spec in rule.slot_specs}
        if group_names != spec_names:
            raise InvalidPattern(
                f"rule {rule.rule_id}: capture groups {sorted(group_names)} "
                f"do not match slot specs {sorted(spec_names)}"
            )
        compiled.append(rx)
    return Grammar(rules=ordered, _compiled=tuple(compiled))


_DAY_WORDS = {"today": "0", "tomorrow": "1"}
_MODE_WORDS = {
    "walk": "walk",
    "walking": "walk",
    "foot": "walk",
    "on foot": "walk",
    "car": "car",
    "driving": "car",
    "drive": "car",
    "bus": "bus",
}


def _slot_value(spec: SlotSpec, raw: str | None) -> str | None:
    if spec.kind is SlotKind.DAY_OFFSET:
        # A missing day word means "today".
        if raw is None:
            return "0"
        return _DAY_WORDS.get(raw.strip(), "0")
    if raw is None:
        return None
    value = raw.strip()
    if spec.kind is SlotKind.TRAVEL_MODE:
        return _MODE_WORDS.get(value, value)
    return value


def parse(grammar: Grammar, utterance: Utterance) -> ParsedIntent:
    """Match the normalized utterance against the grammar.

    The first rule in (priority desc, rule_id asc) order whose pattern matches
    the whole normalized text wins. An utterance matching no rule but carrying
    the hotword parses as a bare wake; anything else is Unknown.
    """
    text = normalize(utterance.text)
    for rule, rx in zip(grammar.rules, grammar._compiled):
        match = rx.fullmatch(text)
        if match is None:
            continue
        slots: dict[str, str] = {}
        for spec in rule.slot_specs:
            value = _slot_value(spec, match.group(spec.name))
            if value is not None:
                slots[spec.name] = value
        return ParsedIntent(kind=rule.intent_kind, slots=slots, matched_rule=rule.rule_id)
    if detect_hotword(text):
        return ParsedIntent(kind=IntentKind.WAKE)
    return ParsedIntent(kind=IntentKind.UNKNOWN)


def load_grammar_rules(path: str | Path) -> list[GrammarRule]:
    """Read grammar rules from a JSON-lines fixture.

    Each line is one object with fields rule_id, intent_kind, priority,
    pattern and slot_specs (a list of {name, kind} objects). Blank lines and
    lines starting with '#' are skipped.
    """
    rules: list[GrammarRule] = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise GrammarError(f"{path}:{line_no}: bad JSON: {exc}") from exc
        specs = tuple(
            SlotSpec(name=s["name"], kind=SlotKind(s["kind"]))
            for s in record.get("slot_specs", [])
        )
        rules.append(
            GrammarRule(
                rule_id=int(record["rule_id"]),
                intent_kind=IntentKind(record["intent_kind"]),
                pattern=record["pattern"],
                slot_specs=specs,
                priority=int(record.get("priority", 0)),
            )
        )
    return rules
