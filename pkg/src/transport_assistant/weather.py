"""Weather answers for today and tomorrow from a pluggable provider.

The default provider is a two-row fixture table, which keeps every answer
deterministic. A live client can replace it behind the same get_weather
surface without touching the dialog layer.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol


CONDITIONS = ("Clear", "Cloudy", "Rain", "Snow")

DEFAULT_TEMPLATE = "{day} will be {condition} with a high of {high} and a low of {low} degrees"

_DAY_NAMES = {0: "today", 1: "tomorrow"}


class UnsupportedDay(ValueError):
    pass


@dataclass(frozen=True)
class WeatherReport:
    day_offset: int
    condition: str
    high_c: int
    low_c: int

    def __post_init__(self) -> None:
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition: {self.condition}")
        if self.low_c > self.high_c:
            raise ValueError("low temperature exceeds high")


class WeatherProvider(Protocol):
    def get_weather(self, day_offset: int) -> WeatherReport: ...


class FixtureWeather:
    """Returns the fixture row for each supported day offset, unchanged."""

    def __init__(self, reports: dict[int, WeatherReport]):
        self._reports = dict(reports)

    def get_weather(self, day_offset: int) -> WeatherReport:
        if day_offset not in (0, 1):
            raise UnsupportedDay(f"day offset {day_offset} not supported")
        return self._reports[day_offset]


def render_weather(report: WeatherReport, template: str = DEFAULT_TEMPLATE) -> str:
    """Spoken sentence naming the condition and both temperatures."""
    return template.format(
        day=_DAY_NAMES[report.day_offset],
        condition=report.condition.lower(),
        high=report.high_c,
        low=report.low_c,
    )


def load_weather(path: str | Path) -> FixtureWeather:
    """Fixture file: tab-separated rows of day_offset, condition, high, low."""
    reports: dict[int, WeatherReport] = {}
    with Path(path).open(newline="") as fh:
        for row in csv.reader(fh, delimiter="\t"):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            offset = int(row[0])
            reports[offset] = WeatherReport(
                day_offset=offset, condition=row[1], high_c=int(row[2]), low_c=int(row[3])
            )
    for offset in (0, 1):
        if offset not in reports:
            raise ValueError(f"weather fixture missing day offset {offset}")
    return FixtureWeather(reports)
