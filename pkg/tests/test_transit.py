"""Geo and timetable query tests.

Reference oracles first: an independent distance formula (spherical law of
cosines), exhaustive argmin for nearest-stop, and a scan-all-departures
implementation for next-bus. The library must agree with these on random
instances, not just on hand-picked examples.
"""

import math
import random

import pytest

from transport_assistant import transit
from transport_assistant.transit import (
    Departure,
    GeoPoint,
    NoService,
    RouteDef,
    Stop,
    Timetable,
    UnknownPlace,
    UnknownRoute,
)


# -- independent oracles ------------------------------------------------------


def oracle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Spherical law of cosines; numerically fine at these magnitudes."""
    la1, lo1, la2, lo2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
    cos_angle = math.sin(la1) * math.sin(la2) + math.cos(la1) * math.cos(la2) * math.cos(
        lo2 - lo1
    )
    return transit.EARTH_RADIUS_M * math.acos(max(-1.0, min(1.0, cos_angle)))


def oracle_nearest(stops, point: GeoPoint) -> Stop:
    return min(stops, key=lambda s: (oracle_distance(point, s.position), s.stop_id))


def oracle_next_bus(tt: Timetable, pos: GeoPoint, place: str, now: int):
    """Scan every departure of every eligible route; wait wraps past midnight.

    Returns (wait, route_id, departure_time) or None when no route serves the
    trip or nothing is scheduled at the boarding stop.
    """
    board = oracle_nearest(tt.stops, pos).stop_id
    dest = oracle_nearest(tt.stops, tt.places[place]).stop_id
    best = None
    for route in tt.routes:
        seq = route.stop_sequence
        if board not in seq or dest not in seq:
            continue
        if seq.index(board) >= seq.index(dest):
            continue
        for dep in tt.departures:
            if dep.route_id != route.route_id or dep.stop_id != board:
                continue
            wait = (dep.time_of_day - now) % transit.DAY_SECONDS
            key = (wait, route.route_id, dep.time_of_day)
            if best is None or key < best:
                best = key
    return best


def random_point(rng: random.Random) -> GeoPoint:
    return GeoPoint(rng.uniform(-80, 80), rng.uniform(-179, 179))


def random_timetable(rng: random.Random) -> Timetable:
    n_stops = rng.randrange(4, 10)
    stops = tuple(
        Stop(f"S{i}", f"stop {i}", random_point(rng)) for i in range(n_stops)
    )
    routes = []
    departures = []
    for r in range(rng.randrange(1, 5)):
        k = rng.randrange(2, min(5, n_stops) + 1)
        seq = tuple(rng.sample([s.stop_id for s in stops], k))
        legs = tuple(rng.randrange(60, 900) for _ in range(k - 1))
        rid = f"R{r}"
        routes.append(RouteDef(rid, str(r), f"route {r}", seq, legs))
        for sid in seq:
            for _ in range(rng.randrange(0, 4)):
                departures.append(Departure(rid, sid, rng.randrange(0, 86400)))
    places = {"dest": random_point(rng)}
    return Timetable(
        stops=stops, routes=tuple(routes), departures=tuple(departures), places=places
    )


# -- distance -----------------------------------------------------------------


def test_meridian_degree_is_111195_meters():
    a = GeoPoint(10.0, 20.0)
    b = GeoPoint(11.0, 20.0)
    d = transit.great_circle_distance(a, b)
    assert abs(d - 111_195.0) <= 1.0


def test_distance_matches_independent_formula():
    rng = random.Random(411)
    for _ in range(1000):
        a, b = random_point(rng), random_point(rng)
        mine = transit.great_circle_distance(a, b)
        ref = oracle_distance(a, b)
        assert mine == pytest.approx(ref, rel=1e-6, abs=1e-3)


def test_distance_symmetry_and_identity():
    rng = random.Random(412)
    for _ in range(1000):
        a, b = random_point(rng), random_point(rng)
        assert transit.great_circle_distance(a, b) == transit.great_circle_distance(b, a)
    p = random_point(rng)
    assert transit.great_circle_distance(p, p) == 0.0


def test_geopoint_bounds():
    with pytest.raises(ValueError):
        GeoPoint(91.0, 0.0)
    with pytest.raises(ValueError):
        GeoPoint(0.0, 181.0)


# -- nearest stop ---------------------------------------------------------------


def test_nearest_stop_matches_argmin_oracle():
    rng = random.Random(413)
    for _ in range(1000):
        stops = tuple(
            Stop(f"S{i}", f"stop {i}", random_point(rng))
            for i in range(rng.randrange(1, 30))
        )
        tt = Timetable(stops=stops, routes=(), departures=(), places={})
        point = random_point(rng)
        got, dist = transit.nearest_stop(tt, point)
        assert got.stop_id == oracle_nearest(stops, point).stop_id
        assert dist == transit.great_circle_distance(point, got.position)


def test_nearest_stop_tie_prefers_lower_stop_id():
    point = GeoPoint(0.0, 0.0)
    twin = GeoPoint(0.0, 0.5)
    stops = (Stop("S9", "after", twin), Stop("S2", "before", twin))
    tt = Timetable(stops=stops, routes=(), departures=(), places={})
    got, _ = transit.nearest_stop(tt, point)
    assert got.stop_id == "S2"


def test_nearest_stop_requires_stops():
    tt = Timetable(stops=(), routes=(), departures=(), places={})
    with pytest.raises(transit.NoStops):
        transit.nearest_stop(tt, GeoPoint(0.0, 0.0))


# -- next bus -----------------------------------------------------------------


def test_next_bus_matches_scan_oracle_on_random_timetables():
    rng = random.Random(414)
    checked = 0
    for _ in range(500):
        tt = random_timetable(rng)
        pos = random_point(rng)
        now = rng.randrange(0, 86400)
        expected = oracle_next_bus(tt, pos, "dest", now)
        if expected is None:
            with pytest.raises(NoService):
                transit.next_bus(tt, pos, "dest", now)
        else:
            answer = transit.next_bus(tt, pos, "dest", now)
            assert (
                answer.wait_seconds,
                answer.route_id,
                answer.departure_time,
            ) == expected
            checked += 1
    assert checked > 50  # the generator must exercise the happy path plenty


def _two_stop_world(extra_departures=()):
    a = Stop("A", "a", GeoPoint(0.0, 0.0))
    b = Stop("B", "b", GeoPoint(1.0, 0.0))
    route = RouteDef("R1", "1", "one way", ("A", "B"), (600,))
    return Timetable(
        stops=(a, b),
        routes=(route,),
        departures=tuple(extra_departures),
        places={"a place": a.position, "b place": b.position},
    )


def test_next_bus_wraps_past_midnight():
    dep_6am = transit.parse_time_of_day("06:00")
    tt = _two_stop_world([Departure("R1", "A", dep_6am)])
    now = transit.parse_time_of_day("23:59")
    answer = transit.next_bus(tt, GeoPoint(0.0, 0.0), "b place", now)
    # 60 s to midnight plus six hours; the scan oracle agrees.
    assert answer.wait_seconds == 21_660
    assert answer.wait_seconds == oracle_next_bus(tt, GeoPoint(0.0, 0.0), "b place", now)[0]


def test_next_bus_direction_matters():
    tt = _two_stop_world([Departure("R1", "A", 100), Departure("R1", "B", 100)])
    assert transit.next_bus(tt, GeoPoint(0.0, 0.0), "b place", 0).route_id == "R1"
    with pytest.raises(NoService):
        transit.next_bus(tt, GeoPoint(1.0, 0.0), "a place", 0)


def test_next_bus_requires_departures():
    tt = _two_stop_world()
    with pytest.raises(NoService):
        transit.next_bus(tt, GeoPoint(0.0, 0.0), "b place", 0)


def test_next_bus_tie_prefers_lower_route_id():
    a = Stop("A", "a", GeoPoint(0.0, 0.0))
    b = Stop("B", "b", GeoPoint(1.0, 0.0))
    routes = (
        RouteDef("R2", "2", "two", ("A", "B"), (600,)),
        RouteDef("R1", "1", "one", ("A", "B"), (600,)),
    )
    tt = Timetable(
        stops=(a, b),
        routes=routes,
        departures=(Departure("R2", "A", 500), Departure("R1", "A", 500)),
        places={"b place": b.position},
    )
    assert transit.next_bus(tt, GeoPoint(0.0, 0.0), "b place", 0).route_id == "R1"


def test_next_bus_on_fixture_world(timetable):
    # From the default rider position at 10:00:00, route 6 leaves the
    # 3rd and jordan stop for the library at 10:05.
    answer = transit.next_bus(
        timetable, GeoPoint(39.16550, -86.52080), "wells library", 36_000
    )
    assert answer.route_id == "R6"
    assert answer.board_stop.stop_id == "S1"
    assert answer.dest_stop.stop_id == "S2"
    assert answer.wait_seconds == 300
    assert transit.format_time_of_day(answer.departure_time) == "10:05"


def test_next_bus_unknown_place(timetable):
    with pytest.raises(UnknownPlace):
        transit.next_bus(timetable, GeoPoint(39.0, -86.0), "narnia", 0)


# -- bus details ----------------------------------------------------------------


def test_bus_details_caps_at_three_and_never_pads(timetable):
    details = transit.bus_details(timetable, "R6", 36_000, stop_id="S1")
    assert [transit.format_time_of_day(t) for t in details.next_departures] == [
        "10:05",
        "10:20",
        "11:00",
    ]
    # Later in the day only one departure remains: the list shrinks, no padding.
    late = transit.bus_details(timetable, "R6", 38_000, stop_id="S1")
    assert [transit.format_time_of_day(t) for t in late.next_departures] == ["11:00"]
    none_left = transit.bus_details(timetable, "R6", 80_000, stop_id="S1")
    assert none_left.next_departures == ()


def test_bus_details_defaults_to_first_stop(timetable):
    details = transit.bus_details(timetable, "R9", 36_000)
    assert details.stop.stop_id == "S4"
    # An off-route context stop also falls back to the first stop.
    off_route = transit.bus_details(timetable, "R9", 36_000, stop_id="S2")
    assert off_route.stop.stop_id == "S4"


def test_bus_details_unknown_route(timetable):
    with pytest.raises(UnknownRoute):
        transit.bus_details(timetable, "R99", 0)


# -- trip durations ---------------------------------------------------------------


def test_walk_1400_meters_takes_1000_seconds():
    # 1400 m along a meridian: offset = 1400 m / (meters per degree).
    start = GeoPoint(39.0, -86.0)
    meters_per_degree = math.pi * transit.EARTH_RADIUS_M / 180.0
    end = GeoPoint(39.0 + 1400.0 / meters_per_degree, -86.0)
    tt = Timetable(stops=(), routes=(), departures=(), places={"gym": end})
    walk = transit.trip_duration(tt, start, "gym", "walk", 0)
    assert walk == pytest.approx(1000.0, abs=0.1)
    car = transit.trip_duration(tt, start, "gym", "car", 0)
    assert car == pytest.approx(100.7, abs=0.1)


def test_bus_trip_is_sum_of_components(timetable):
    user = GeoPoint(39.16550, -86.52080)
    now = 36_000
    total = transit.trip_duration(timetable, user, "wells library", "bus", now)

    # Recompute each leg independently.
    board = oracle_nearest(timetable.stops, user)
    dest_point = timetable.places["wells library"]
    dest_stop = oracle_nearest(timetable.stops, dest_point)
    walk_in = oracle_distance(user, board.position) / transit.WALK_SPEED_MPS
    wait, route_id, _ = oracle_next_bus(timetable, user, "wells library", now)
    route = timetable.route(route_id)
    i = route.stop_sequence.index(board.stop_id)
    j = route.stop_sequence.index(dest_stop.stop_id)
    ride = sum(route.inter_stop_seconds[i:j])
    walk_out = oracle_distance(dest_stop.position, dest_point) / transit.WALK_SPEED_MPS
    assert total == pytest.approx(walk_in + wait + ride + walk_out, rel=1e-6)


def test_trip_duration_rejects_unknown_mode(timetable):
    with pytest.raises(ValueError):
        transit.trip_duration(timetable, GeoPoint(39.0, -86.0), "wells library", "boat", 0)


def test_trip_duration_unknown_place(timetable):
    with pytest.raises(UnknownPlace):
        transit.trip_duration(timetable, GeoPoint(39.0, -86.0), "narnia", "walk", 0)


# -- clock helpers -----------------------------------------------------------------


def test_time_of_day():
    assert transit.time_of_day(0) == 0
    assert transit.time_of_day(36_000_000) == 36_000
    assert transit.time_of_day(86_400_000) == 0
    assert transit.time_of_day(90_000_500) == 3600


def test_parse_and_format_time_roundtrip():
    rng = random.Random(415)
    for _ in range(200):
        secs = rng.randrange(0, 86400)
        hh, rem = divmod(secs, 3600)
        mm, ss = divmod(rem, 60)
        assert transit.parse_time_of_day(f"{hh:02d}:{mm:02d}:{ss:02d}") == secs
    assert transit.parse_time_of_day("10:05") == 36_300
    assert transit.format_time_of_day(36_300) == "10:05"
    with pytest.raises(ValueError):
        transit.parse_time_of_day("25:00")
    with pytest.raises(ValueError):
        transit.parse_time_of_day("sometime")


def test_minutes_phrase_rounds_to_nearest_minute():
    assert transit.minutes_phrase(0) == "1 minute"
    assert transit.minutes_phrase(29) == "1 minute"
    assert transit.minutes_phrase(89) == "1 minute"
    assert transit.minutes_phrase(90) == "2 minutes"
    assert transit.minutes_phrase(300) == "5 minutes"
    assert transit.minutes_phrase(3600) == "60 minutes"
    # Reference rounding: nearest minute, floored at one.
    rng = random.Random(416)
    for _ in range(500):
        s = rng.randrange(0, 20_000)
        expected = max(1, (s + 30) // 60)
        unit = "minute" if expected == 1 else "minutes"
        assert transit.minutes_phrase(s) == f"{expected} {unit}"


# -- timetable validation and loading -------------------------------------------------


def test_route_validation():
    with pytest.raises(ValueError):
        RouteDef("R1", "1", "too short", ("A",), ())
    with pytest.raises(ValueError):
        RouteDef("R1", "1", "repeat", ("A", "A"), (60,))
    with pytest.raises(ValueError):
        RouteDef("R1", "1", "leg count", ("A", "B"), (60, 60))
    with pytest.raises(ValueError):
        RouteDef("R1", "1", "bad leg", ("A", "B"), (0,))


def test_departure_time_bounds():
    with pytest.raises(ValueError):
        Departure("R1", "A", 86_400)
    with pytest.raises(ValueError):
        Departure("R1", "A", -1)


def test_timetable_referential_integrity():
    a = Stop("A", "a", GeoPoint(0.0, 0.0))
    b = Stop("B", "b", GeoPoint(0.1, 0.0))
    with pytest.raises(ValueError):
        Timetable(
            stops=(a,),
            routes=(RouteDef("R1", "1", "dangling", ("A", "B"), (60,)),),
            departures=(),
            places={},
        )
    with pytest.raises(ValueError):
        Timetable(
            stops=(a, b),
            routes=(RouteDef("R1", "1", "ok", ("A", "B"), (60,)),),
            departures=(Departure("R1", "C", 100),),
            places={},
        )
    with pytest.raises(ValueError):
        Timetable(
            stops=(a, b),
            routes=(RouteDef("R1", "1", "ok", ("A", "B"), (60,)),),
            departures=(Departure("R9", "A", 100),),
            places={},
        )
    with pytest.raises(ValueError):
        Timetable(stops=(a, a), routes=(), departures=(), places={})


def test_load_timetable_fixture(timetable):
    assert {r.route_id for r in timetable.routes} == {"R6", "R9"}
    assert len(timetable.stops) == 5
    assert "wells library" in timetable.places
    route_ids = {r.route_id for r in timetable.routes}
    assert all(dep.route_id in route_ids for dep in timetable.departures)


def test_read_tsv_rows_skips_comments(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("# header\none\ttwo\n\nthree\tfour\n")
    assert transit.read_tsv_rows(path) == [["one", "two"], ["three", "four"]]
