"""Camera-frame pipeline: pluggable recognizer, alert rules, scene sentences.

A frame carries a content key standing in for pixel data; the recognizer maps
it to weighted labels. Alert rules turn matching labels into spoken alerts,
rate-limited per rule by a cooldown, and the scene describer turns the top
labels into one sentence when nothing alert-worthy is in view.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol

from .dialog import SpeechEvent, SpeechKind


CANNOT_IDENTIFY = "I cannot identify anything right now"


class FrameSource(Enum):
    BODY_CAMERA = "BodyCamera"
    INJECTED = "Injected"


class RecognizerUnavailable(Exception):
    pass


@dataclass(frozen=True)
class Frame:
    frame_id: str
    captured_at: int
    source: FrameSource
    content_key: str


@dataclass(frozen=True)
class Classification:
    frame_id: str
    labels: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        scores = [score for _, score in self.labels]
        if any(not 0.0 <= s <= 1.0 for s in scores):
            raise ValueError("label scores must be within [0, 1]")
        if scores != sorted(scores, reverse=True):
            raise ValueError("labels must be sorted by descending score")


@dataclass(frozen=True)
class AlertRule:
    label_substring: str
    min_score: float
    alert_text: str
    cooldown_seconds: float
    marks_obstacle: bool = False

    def __post_init__(self) -> None:
        if not self.alert_text:
            raise ValueError("alert_text must be non-empty")
        if self.cooldown_seconds <= 0:
            raise ValueError("cooldown_seconds must be positive")


class Recognizer(Protocol):
    def classify(self, frame: Frame) -> Classification: ...


class MockRecognizer:
    """Deterministic table recognizer; unknown keys classify to nothing."""

    def __init__(self, table: dict[str, list[tuple[str, float]]]):
        self._table = {
            key: tuple(sorted(labels, key=lambda pair: -pair[1]))
            for key, labels in table.items()
        }

    def classify(self, frame: Frame) -> Classification:
        return Classification(frame_id=frame.frame_id, labels=self._table.get(frame.content_key, ()))


class HttpRecognizer:
    """Remote recognizer adapter. POSTs {"content_key": ...} and expects
    {"labels": [[label, score], ...]} back. Not used by the shipped fixtures."""

    def __init__(self, url: str, timeout: float = 5.0):
        self.url = url
        self.timeout = timeout

    def classify(self, frame: Frame) -> Classification:
        body = json.dumps({"content_key": frame.content_key}).encode()
        request = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.loads(response.read())
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise RecognizerUnavailable(str(exc)) from exc
        labels = tuple((str(l), float(s)) for l, s in payload.get("labels", []))
        return Classification(frame_id=frame.frame_id, labels=labels)


def classify_frame(recognizer: Recognizer, frame: Frame) -> Classification:
    return recognizer.classify(frame)


def rule_matches(rule: AlertRule, classification: Classification) -> bool:
    """Threshold-and-substring test, ignoring any cooldown."""
    needle = rule.label_substring.lower()
    return any(
        needle in label.lower() and score >= rule.min_score
        for label, score in classification.labels
    )


def evaluate_alerts(
    classification: Classification,
    rules: list[AlertRule],
    cooldown_state: dict[int, int],
    now: int,
    session_id: str,
) -> list[SpeechEvent]:
    """Fire every matching rule whose cooldown has elapsed.

    cooldown_state maps rule index to the last firing time (ms) and is
    updated in place, so the caller owns one dict per session.
    """
    events: list[SpeechEvent] = []
    for index, rule in enumerate(rules):
        if not rule_matches(rule, classification):
            continue
        last = cooldown_state.get(index)
        if last is not None and now - last < rule.cooldown_seconds * 1000:
            continue
        cooldown_state[index] = now
        events.append(
            SpeechEvent(
                kind=SpeechKind.ALERT,
                text=rule.alert_text,
                emitted_at=now,
                session_id=session_id,
            )
        )
    return events


def describe_scene(classification: Classification, k: int) -> str:
    """One sentence naming the top-k labels, or a fixed fallback."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not classification.labels:
        return CANNOT_IDENTIFY
    names = [label for label, _ in classification.labels[:k]]
    return "I can see " + ", ".join(names)


def load_recognizer_table(path: str | Path) -> MockRecognizer:
    """Recognizer fixture: JSON lines of {"content_key", "labels": [[label, score], ...]}."""
    table: dict[str, list[tuple[str, float]]] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        record = json.loads(line)
        table[record["content_key"]] = [(str(l), float(s)) for l, s in record["labels"]]
    return MockRecognizer(table)


def load_alert_rules(path: str | Path) -> list[AlertRule]:
    """Alert-rule fixture: JSON lines of {"label_substring", "min_score",
    "alert_text", "cooldown_seconds", "marks_obstacle"?}."""
    rules: list[AlertRule] = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        record = json.loads(line)
        rules.append(
            AlertRule(
                label_substring=record["label_substring"],
                min_score=float(record["min_score"]),
                alert_text=record["alert_text"],
                cooldown_seconds=float(record["cooldown_seconds"]),
                marks_obstacle=bool(record.get("marks_obstacle", False)),
            )
        )
    return rules
