"""Local ride dispatch: a stand-in for a real ride-hailing backend.

Holds a small driver fleet, assigns the nearest available driver to each
request, and advances rides over simulated time, messaging both the rider and
the driver at every state change. All mutations run under one lock so event
order is total.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .transit import (
    CAR_SPEED_MPS,
    GeoPoint,
    UnknownPlace,
    great_circle_distance,
    minutes_phrase,
    read_tsv_rows,
)


ARRIVING_RADIUS_M = 100.0
AT_POINT_RADIUS_M = 5.0


class RideState(Enum):
    REQUESTED = "Requested"
    DRIVER_ASSIGNED = "DriverAssigned"
    ARRIVING = "Arriving"
    IN_PROGRESS = "InProgress"
    COMPLETED = "Completed"
    CANCELLED = "Cancelled"


TERMINAL_STATES = frozenset({RideState.COMPLETED, RideState.CANCELLED})
CANCELLABLE_STATES = frozenset(
    {RideState.REQUESTED, RideState.DRIVER_ASSIGNED, RideState.ARRIVING}
)

# The full transition relation; anything else is a bug.
ALLOWED_TRANSITIONS = frozenset(
    {
        (RideState.REQUESTED, RideState.DRIVER_ASSIGNED),
        (RideState.DRIVER_ASSIGNED, RideState.ARRIVING),
        (RideState.ARRIVING, RideState.IN_PROGRESS),
        (RideState.IN_PROGRESS, RideState.COMPLETED),
        (RideState.REQUESTED, RideState.CANCELLED),
        (RideState.DRIVER_ASSIGNED, RideState.CANCELLED),
        (RideState.ARRIVING, RideState.CANCELLED),
    }
)


class Recipient(Enum):
    RIDER = "Rider"
    DRIVER = "Driver"


class DispatchError(Exception):
    pass


class InvalidTransition(DispatchError):
    pass


class NoDriversAvailable(DispatchError):
    pass


class UnknownRide(DispatchError):
    pass


@dataclass
class Driver:
    driver_id: str
    name: str
    position: GeoPoint
    available: bool = True


@dataclass(frozen=True)
class Ride:
    ride_id: str
    session_id: str
    pickup: GeoPoint
    destination_place: str
    state: RideState
    driver_id: str | None = None
    eta_seconds: float | None = None


@dataclass(frozen=True)
class DispatchMessage:
    recipient: Recipient
    text: str
    ride_id: str
    sent_at: int


DEFAULT_MESSAGES: dict[str, str] = {
    "assigned_rider": "your driver {driver_name} is on the way, about {eta} away",
    "assigned_driver": "pickup for ride {ride_id} at {pickup}",
    "arriving_rider": "your driver is arriving",
    "started_rider": "your ride has started",
    "completed_rider": "you have arrived",
    "cancelled_rider": "your ride has been cancelled",
    "cancelled_driver": "ride {ride_id} was cancelled",
}


def _format_point(p: GeoPoint) -> str:
    return f"{p.lat:.5f}, {p.lon:.5f}"


class Dispatch:
    """Single-writer ride store over a fixed fleet and known places."""

    def __init__(
        self,
        fleet: Iterable[Driver],
        places: Mapping[str, GeoPoint],
        messages: Mapping[str, str] | None = None,
        clock: Callable[[], int] | None = None,
    ):
        self._drivers = {d.driver_id: d for d in fleet}
        self._places = dict(places)
        self._messages = dict(DEFAULT_MESSAGES)
        if messages:
            self._messages.update(messages)
        self._clock = clock or (lambda: 0)
        self._rides: dict[str, Ride] = {}
        self._next_ride = 1
        self._lock = threading.RLock()

    # -- queries ------------------------------------------------------------

    def get(self, ride_id: str) -> Ride:
        with self._lock:
            try:
                return self._rides[ride_id]
            except KeyError:
                raise UnknownRide(ride_id) from None

    def rides(self) -> list[Ride]:
        with self._lock:
            return list(self._rides.values())

    def active_rides(self) -> list[Ride]:
        with self._lock:
            return [r for r in self._rides.values() if r.state not in TERMINAL_STATES]

    def drivers(self) -> list[Driver]:
        with self._lock:
            return list(self._drivers.values())

    def has_available_driver(self) -> bool:
        with self._lock:
            return any(d.available for d in self._drivers.values())

    # -- state machine ------------------------------------------------------

    def request_ride(self, pickup: GeoPoint, destination_place: str, session_id: str) -> Ride:
        with self._lock:
            if destination_place not in self._places:
                raise UnknownPlace(destination_place)
            ride = Ride(
                ride_id=f"ride-{self._next_ride}",
                session_id=session_id,
                pickup=pickup,
                destination_place=destination_place,
                state=RideState.REQUESTED,
            )
            self._next_ride += 1
            self._rides[ride.ride_id] = ride
            return ride

    def assign_driver(self, ride_id: str) -> tuple[Ride, list[DispatchMessage]]:
        """Give the ride the nearest available driver; ties go to the smaller
        driver_id. Messages the rider (name + ETA) and the driver (pickup)."""
        with self._lock:
            ride = self.get(ride_id)
            if ride.state is not RideState.REQUESTED:
                raise InvalidTransition(f"cannot assign driver in state {ride.state.value}")
            candidates = [d for d in self._drivers.values() if d.available]
            if not candidates:
                raise NoDriversAvailable("no available drivers")
            driver = min(
                candidates,
                key=lambda d: (great_circle_distance(d.position, ride.pickup), d.driver_id),
            )
            driver.available = False
            eta = great_circle_distance(driver.position, ride.pickup) / CAR_SPEED_MPS
            ride = self._transition(
                ride, RideState.DRIVER_ASSIGNED, driver_id=driver.driver_id, eta_seconds=eta
            )
            messages = [
                self._message(
                    Recipient.RIDER,
                    "assigned_rider",
                    ride,
                    driver_name=driver.name,
                    eta=minutes_phrase(eta),
                ),
                self._message(
                    Recipient.DRIVER,
                    "assigned_driver",
                    ride,
                    pickup=_format_point(ride.pickup),
                ),
            ]
            return ride, messages

    def advance(self, ride_id: str, dt: float) -> tuple[Ride, list[DispatchMessage]]:
        """Move the assigned driver for dt seconds toward the pickup, then the
        destination, taking at most one state transition per call."""
        with self._lock:
            ride = self.get(ride_id)
            if ride.state in TERMINAL_STATES or ride.driver_id is None:
                raise InvalidTransition(f"cannot advance ride in state {ride.state.value}")
            driver = self._drivers[ride.driver_id]
            if ride.state is RideState.IN_PROGRESS:
                target = self._places[ride.destination_place]
            else:
                target = ride.pickup
            distance = self._move_driver(driver, target, CAR_SPEED_MPS * dt)

            messages: list[DispatchMessage] = []
            if ride.state is RideState.DRIVER_ASSIGNED and distance <= ARRIVING_RADIUS_M:
                ride = self._transition(ride, RideState.ARRIVING)
                messages.append(self._message(Recipient.RIDER, "arriving_rider", ride))
            elif ride.state is RideState.ARRIVING and distance < AT_POINT_RADIUS_M:
                ride = self._transition(ride, RideState.IN_PROGRESS)
                messages.append(self._message(Recipient.RIDER, "started_rider", ride))
            elif ride.state is RideState.IN_PROGRESS and distance < AT_POINT_RADIUS_M:
                ride = self._transition(ride, RideState.COMPLETED)
                driver.available = True
                messages.append(self._message(Recipient.RIDER, "completed_rider", ride))
            return ride, messages

    def cancel(self, ride_id: str) -> tuple[Ride, list[DispatchMessage]]:
        with self._lock:
            ride = self.get(ride_id)
            if ride.state not in CANCELLABLE_STATES:
                raise InvalidTransition(f"cannot cancel ride in state {ride.state.value}")
            driver_id = ride.driver_id
            ride = self._transition(ride, RideState.CANCELLED)
            messages = [self._message(Recipient.RIDER, "cancelled_rider", ride)]
            if driver_id is not None:
                self._drivers[driver_id].available = True
                messages.append(self._message(Recipient.DRIVER, "cancelled_driver", ride))
            return ride, messages

    # -- internals ----------------------------------------------------------

    def _transition(self, ride: Ride, new_state: RideState, **changes) -> Ride:
        if (ride.state, new_state) not in ALLOWED_TRANSITIONS:
            raise InvalidTransition(f"{ride.state.value} -> {new_state.value}")
        updated = replace(ride, state=new_state, **changes)
        self._rides[ride.ride_id] = updated
        return updated

    @staticmethod
    def _move_driver(driver: Driver, target: GeoPoint, step_m: float) -> float:
        """Move up to step_m toward target (straight line in coordinates at
        desk scale); returns the remaining distance."""
        distance = great_circle_distance(driver.position, target)
        if distance <= step_m or distance == 0.0:
            driver.position = target
            return 0.0
        f = step_m / distance
        driver.position = GeoPoint(
            lat=driver.position.lat + (target.lat - driver.position.lat) * f,
            lon=driver.position.lon + (target.lon - driver.position.lon) * f,
        )
        return great_circle_distance(driver.position, target)

    def _message(self, recipient: Recipient, key: str, ride: Ride, **params) -> DispatchMessage:
        text = self._messages[key].format(ride_id=ride.ride_id, **params)
        return DispatchMessage(
            recipient=recipient, text=text, ride_id=ride.ride_id, sent_at=self._clock()
        )

    # -- persistence --------------------------------------------------------

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "next_ride": self._next_ride,
                "drivers": [
                    {
                        "driver_id": d.driver_id,
                        "name": d.name,
                        "lat": d.position.lat,
                        "lon": d.position.lon,
                        "available": d.available,
                    }
                    for d in self._drivers.values()
                ],
                "rides": [
                    {
                        "ride_id": r.ride_id,
                        "session_id": r.session_id,
                        "pickup": [r.pickup.lat, r.pickup.lon],
                        "destination_place": r.destination_place,
                        "state": r.state.value,
                        "driver_id": r.driver_id,
                        "eta_seconds": r.eta_seconds,
                    }
                    for r in self._rides.values()
                ],
            }

    def restore(self, snap: dict) -> None:
        with self._lock:
            self._next_ride = snap["next_ride"]
            for d in snap["drivers"]:
                driver = self._drivers.get(d["driver_id"])
                if driver is None:
                    continue
                driver.position = GeoPoint(d["lat"], d["lon"])
                driver.available = d["available"]
            self._rides = {
                r["ride_id"]: Ride(
                    ride_id=r["ride_id"],
                    session_id=r["session_id"],
                    pickup=GeoPoint(*r["pickup"]),
                    destination_place=r["destination_place"],
                    state=RideState(r["state"]),
                    driver_id=r["driver_id"],
                    eta_seconds=r["eta_seconds"],
                )
                for r in snap["rides"]
            }


def load_fleet(path: str | Path) -> list[Driver]:
    """Fleet fixture: tab-separated rows of driver_id, name, lat, lon."""
    return [
        Driver(driver_id=r[0], name=r[1], position=GeoPoint(float(r[2]), float(r[3])))
        for r in read_tsv_rows(Path(path))
    ]


def load_message_templates(path: str | Path) -> dict[str, str]:
    """Message-template fixture: tab-separated key, text rows."""
    return {r[0]: r[1] for r in read_tsv_rows(Path(path))}
