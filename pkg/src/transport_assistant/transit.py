"""Geo math and a static timetable answering stop, bus and trip questions.

The world is a set of stops, routes (ordered stop sequences with in-vehicle
ride times), scheduled departures in seconds since local midnight, and named
places. Everything is immutable after load; queries are read-only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path


EARTH_RADIUS_M = 6_371_000.0
WALK_SPEED_MPS = 1.4
CAR_SPEED_MPS = 13.9
DAY_SECONDS = 86_400


class TransitError(Exception):
    """Base class for timetable lookup failures."""


class NoStops(TransitError):
    pass


class UnknownPlace(TransitError):
    pass


class UnknownRoute(TransitError):
    pass


class NoService(TransitError):
    """No single route serves both the boarding and destination stops in order."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class Stop:
    stop_id: str
    name: str
    position: GeoPoint


@dataclass(frozen=True)
class RouteDef:
    route_id: str
    short_name: str
    description: str
    stop_sequence: tuple[str, ...]
    inter_stop_seconds: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.stop_sequence) < 2:
            raise ValueError(f"route {self.route_id} needs at least 2 stops")
        if len(set(self.stop_sequence)) != len(self.stop_sequence):
            raise ValueError(f"route {self.route_id} repeats a stop")
        if len(self.inter_stop_seconds) != len(self.stop_sequence) - 1:
            raise ValueError(f"route {self.route_id} has mismatched leg times")
        if any(s <= 0 for s in self.inter_stop_seconds):
            raise ValueError(f"route {self.route_id} has a non-positive leg time")


@dataclass(frozen=True)
class Departure:
    route_id: str
    stop_id: str
    time_of_day: int  # seconds since local midnight, [0, 86400)

    def __post_init__(self) -> None:
        if not 0 <= self.time_of_day < DAY_SECONDS:
            raise ValueError(f"departure time out of range: {self.time_of_day}")


@dataclass(frozen=True)
class Timetable:
    stops: tuple[Stop, ...]
    routes: tuple[RouteDef, ...]
    departures: tuple[Departure, ...]
    places: dict[str, GeoPoint]

    def __post_init__(self) -> None:
        stop_ids = {s.stop_id for s in self.stops}
        if len(stop_ids) != len(self.stops):
            raise ValueError("duplicate stop_id")
        for route in self.routes:
            missing = set(route.stop_sequence) - stop_ids
            if missing:
                raise ValueError(f"route {route.route_id} references unknown stops {sorted(missing)}")
        route_stops = {(r.route_id, s) for r in self.routes for s in r.stop_sequence}
        for dep in self.departures:
            if (dep.route_id, dep.stop_id) not in route_stops:
                raise ValueError(f"departure for {dep.route_id} at {dep.stop_id} not on that route")

    def stop(self, stop_id: str) -> Stop:
        for s in self.stops:
            if s.stop_id == stop_id:
                return s
        raise KeyError(stop_id)

    def route(self, route_id: str) -> RouteDef:
        for r in self.routes:
            if r.route_id == route_id:
                return r
        raise UnknownRoute(route_id)

    def place(self, name: str) -> GeoPoint:
        try:
            return self.places[name]
        except KeyError:
            raise UnknownPlace(name) from None


@dataclass(frozen=True)
class NextBusAnswer:
    route_id: str
    short_name: str
    board_stop: Stop
    dest_stop: Stop
    departure_time: int
    wait_seconds: int


@dataclass(frozen=True)
class RouteDetails:
    route_id: str
    short_name: str
    description: str
    stop: Stop
    next_departures: tuple[int, ...]  # at most 3, times-of-day at `stop`


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in meters on a sphere of radius 6,371,000 m."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlambda = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlambda / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def nearest_stop(tt: Timetable, pos: GeoPoint) -> tuple[Stop, float]:
    """The stop closest to pos; exact distance ties go to the smaller stop_id."""
    if not tt.stops:
        raise NoStops("timetable has no stops")
    best = min(tt.stops, key=lambda s: (great_circle_distance(pos, s.position), s.stop_id))
    return best, great_circle_distance(pos, best.position)


def _eligible_routes(tt: Timetable, board_id: str, dest_id: str) -> list[RouteDef]:
    """Routes serving the boarding stop strictly before the destination stop."""
    out = []
    for route in tt.routes:
        seq = route.stop_sequence
        if board_id in seq and dest_id in seq and seq.index(board_id) < seq.index(dest_id):
            out.append(route)
    return out


def next_bus(tt: Timetable, pos: GeoPoint, place: str, now: int) -> NextBusAnswer:
    """Earliest departure from the stop nearest pos on a route that later
    serves the stop nearest the named place. Times wrap past midnight, so a
    late-night query answers with tomorrow's first bus.
    """
    target = tt.place(place)
    board, _ = nearest_stop(tt, pos)
    dest, _ = nearest_stop(tt, target)
    eligible = {r.route_id: r for r in _eligible_routes(tt, board.stop_id, dest.stop_id)}
    if not eligible:
        raise NoService(f"no direct route from {board.stop_id} to {dest.stop_id}")

    best: tuple[int, str, int] | None = None  # (wait, route_id, departure_time)
    for dep in tt.departures:
        if dep.stop_id != board.stop_id or dep.route_id not in eligible:
            continue
        wait = (dep.time_of_day - now) % DAY_SECONDS
        key = (wait, dep.route_id, dep.time_of_day)
        if best is None or key < best:
            best = key
    if best is None:
        raise NoService(f"no scheduled departures at {board.stop_id}")
    wait, route_id, dep_time = best
    return NextBusAnswer(
        route_id=route_id,
        short_name=eligible[route_id].short_name,
        board_stop=board,
        dest_stop=dest,
        departure_time=dep_time,
        wait_seconds=wait,
    )


def bus_details(tt: Timetable, route_id: str, now: int, stop_id: str | None = None) -> RouteDetails:
    """Route description plus its next (at most 3) departures today at the
    context stop. With no context stop, the route's first stop is used."""
    route = tt.route(route_id)
    if stop_id is None or stop_id not in route.stop_sequence:
        stop_id = route.stop_sequence[0]
    remaining = sorted(
        d.time_of_day
        for d in tt.departures
        if d.route_id == route_id and d.stop_id == stop_id and d.time_of_day >= now
    )
    return RouteDetails(
        route_id=route.route_id,
        short_name=route.short_name,
        description=route.description,
        stop=tt.stop(stop_id),
        next_departures=tuple(remaining[:3]),
    )


def trip_duration(tt: Timetable, pos: GeoPoint, place: str, mode: str, now: int) -> float:
    """Door-to-door travel time in seconds for mode walk, car or bus.

    Bus trips are walk to the boarding stop, wait for the next eligible bus,
    ride the scheduled leg times, then walk from the alighting stop.
    """
    target = tt.place(place)
    direct = great_circle_distance(pos, target)
    if mode == "walk":
        return direct / WALK_SPEED_MPS
    if mode == "car":
        return direct / CAR_SPEED_MPS
    if mode != "bus":
        raise ValueError(f"unknown travel mode: {mode}")

    answer = next_bus(tt, pos, place, now)
    route = tt.route(answer.route_id)
    i = route.stop_sequence.index(answer.board_stop.stop_id)
    j = route.stop_sequence.index(answer.dest_stop.stop_id)
    ride = sum(route.inter_stop_seconds[i:j])
    walk_in = great_circle_distance(pos, answer.board_stop.position) / WALK_SPEED_MPS
    walk_out = great_circle_distance(answer.dest_stop.position, target) / WALK_SPEED_MPS
    return walk_in + answer.wait_seconds + ride + walk_out


def parse_time_of_day(text: str) -> int:
    """"HH:MM" or "HH:MM:SS" to seconds since midnight."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad time of day: {text!r}")
    h, m = int(parts[0]), int(parts[1])
    s = int(parts[2]) if len(parts) == 3 else 0
    total = h * 3600 + m * 60 + s
    if not 0 <= total < DAY_SECONDS:
        raise ValueError(f"time of day out of range: {text!r}")
    return total


def time_of_day(epoch_ms: int) -> int:
    """Seconds since local midnight for a milliseconds-since-epoch timestamp."""
    return (epoch_ms // 1000) % DAY_SECONDS


def format_time_of_day(seconds: int) -> str:
    h, rem = divmod(seconds, 3600)
    m = rem // 60
    return f"{h:02d}:{m:02d}"


def minutes_phrase(seconds: float) -> str:
    """Spoken duration rounded to whole minutes, never below one."""
    minutes = max(1, (int(seconds) + 30) // 60)
    unit = "minute" if minutes == 1 else "minutes"
    return f"{minutes} {unit}"


def read_tsv_rows(path: str | Path) -> list[list[str]]:
    """Tab-separated rows; blank lines and '#' comment lines skipped."""
    with Path(path).open(newline="") as fh:
        return [
            row
            for row in csv.reader(fh, delimiter="\t")
            if row and row[0].strip() and not row[0].lstrip().startswith("#")
        ]


def load_timetable(directory: str | Path) -> Timetable:
    """Load a timetable from a fixture directory.

    Expected files (tab-separated, '#' comments allowed):
      stops.tsv       stop_id, name, lat, lon
      routes.tsv      route_id, short_name, description,
                      comma-joined stop_ids, comma-joined leg seconds
      departures.tsv  route_id, stop_id, HH:MM[:SS]
      places.tsv      name, lat, lon
    """
    directory = Path(directory)
    stops = tuple(
        Stop(stop_id=r[0], name=r[1], position=GeoPoint(float(r[2]), float(r[3])))
        for r in read_tsv_rows(directory / "stops.tsv")
    )
    routes = tuple(
        RouteDef(
            route_id=r[0],
            short_name=r[1],
            description=r[2],
            stop_sequence=tuple(r[3].split(",")),
            inter_stop_seconds=tuple(int(x) for x in r[4].split(",")),
        )
        for r in read_tsv_rows(directory / "routes.tsv")
    )
    departures = tuple(
        Departure(route_id=r[0], stop_id=r[1], time_of_day=parse_time_of_day(r[2]))
        for r in read_tsv_rows(directory / "departures.tsv")
    )
    places = {
        r[0]: GeoPoint(float(r[1]), float(r[2]))
        for r in read_tsv_rows(directory / "places.tsv")
    }
    return Timetable(stops=stops, routes=routes, departures=departures, places=places)
