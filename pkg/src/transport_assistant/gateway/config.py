"""Gateway configuration: fixture paths plus numeric tunables.

Precedence, lowest to highest: built-in defaults, config file, environment
variables (TA_<FIELD>), explicit overrides (CLI flags).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping


PACKAGE_FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

ENV_PREFIX = "TA_"


@dataclass
class GatewayConfig:
    host: str = "127.0.0.1"
    port: int = 8750
    grammar_path: str = str(PACKAGE_FIXTURES / "grammar.jsonl")
    replies_path: str = str(PACKAGE_FIXTURES / "replies.txt")
    timetable_dir: str = str(PACKAGE_FIXTURES / "timetable")
    weather_path: str = str(PACKAGE_FIXTURES / "weather.tsv")
    fleet_path: str = str(PACKAGE_FIXTURES / "fleet.tsv")
    dispatch_messages_path: str = str(PACKAGE_FIXTURES / "dispatch_messages.txt")
    recognizer_path: str = str(PACKAGE_FIXTURES / "recognizer.jsonl")
    alert_rules_path: str = str(PACKAGE_FIXTURES / "alert_rules.jsonl")
    map_path: str = str(PACKAGE_FIXTURES / "maps" / "campus.txt")
    journal_path: str = ""  # empty: no persistence
    console_dir: str = ""  # empty: no static console mounted
    battery_threshold: int = 20
    idle_timeout_s: float = 60.0
    tick_period_s: float = 1.0
    describe_labels: int = 3
    default_lat: float = 39.16550
    default_lon: float = -86.52080
    nav_start_place: str = "entrance"
    nav_heading: str = "North"

    def __post_init__(self) -> None:
        if self.battery_threshold <= 0 or not self.idle_timeout_s > 0:
            raise ValueError("battery_threshold and idle_timeout_s must be positive")
        if self.tick_period_s <= 0 or self.describe_labels < 1:
            raise ValueError("tick_period_s and describe_labels must be positive")
        for name in (
            "grammar_path",
            "replies_path",
            "timetable_dir",
            "weather_path",
            "fleet_path",
            "dispatch_messages_path",
            "recognizer_path",
            "alert_rules_path",
            "map_path",
        ):
            value = getattr(self, name)
            if not Path(value).exists():
                raise FileNotFoundError(f"{name}: {value}")


def load_config(
    file_path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, object] | None = None,
) -> GatewayConfig:
    """Merge defaults, config file, environment and explicit overrides."""
    values: dict[str, object] = {}
    known = {f.name: f.type for f in fields(GatewayConfig)}

    if file_path:
        data = json.loads(Path(file_path).read_text())
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)

    env = os.environ if env is None else env
    for name in known:
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = raw

    for name, value in (overrides or {}).items():
        if name not in known:
            raise ValueError(f"unknown config override: {name}")
        if value is not None:
            values[name] = value

    coerced = {name: _coerce(name, value) for name, value in values.items()}
    return GatewayConfig(**coerced)


def _coerce(name: str, value: object):
    default = getattr(GatewayConfig, name)
    if isinstance(default, bool):
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return str(value)
