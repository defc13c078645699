"""Grid-world walking navigation with spoken turn-by-turn instructions.

The world is a 4-connected grid; North is decreasing y. A session plans a
shortest path, then each tick speaks one instruction and applies it to a
simulated walker. Obstacles can appear mid-walk: the walker is stopped when
one sits straight ahead, the cell is marked blocked, and the route is
replanned from where the walker stands.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping


Cell = tuple[int, int]


class Heading(Enum):
    NORTH = "North"
    EAST = "East"
    SOUTH = "South"
    WEST = "West"


# North = decreasing y; the same order is the tie-break order everywhere.
DELTAS: dict[Heading, Cell] = {
    Heading.NORTH: (0, -1),
    Heading.EAST: (1, 0),
    Heading.SOUTH: (0, 1),
    Heading.WEST: (-1, 0),
}

_LEFT = {Heading.NORTH: Heading.WEST, Heading.WEST: Heading.SOUTH,
         Heading.SOUTH: Heading.EAST, Heading.EAST: Heading.NORTH}
_RIGHT = {v: k for k, v in _LEFT.items()}


class InstructionKind(Enum):
    WALK_STRAIGHT = "WalkStraight"
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    STOP_OBSTACLE = "StopObstacle"
    ARRIVED = "Arrived"


INSTRUCTION_TEXT: dict[InstructionKind, str] = {
    InstructionKind.WALK_STRAIGHT: "walk straight",
    InstructionKind.TURN_LEFT: "turn left",
    InstructionKind.TURN_RIGHT: "turn right",
    InstructionKind.STOP_OBSTACLE: "stop! obstacle ahead",
    InstructionKind.ARRIVED: "you have arrived at your destination",
}


@dataclass(frozen=True)
class NavInstruction:
    kind: InstructionKind

    @property
    def text(self) -> str:
        return INSTRUCTION_TEXT[self.kind]


class NavError(Exception):
    pass


class Unreachable(NavError):
    pass


class OffPath(NavError):
    pass


class IllegalMove(NavError):
    """The walker would enter a blocked or out-of-bounds cell: an internal bug."""


class DestinationUnreachable(NavError):
    pass


class UnknownDestination(NavError):
    pass


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    blocked: frozenset[Cell]
    places: dict[str, Cell]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        for name, cell in self.places.items():
            if not self.in_bounds(cell) or cell in self.blocked:
                raise ValueError(f"place {name!r} at {cell} is blocked or out of bounds")

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height


@dataclass(frozen=True)
class WalkerState:
    cell: Cell
    heading: Heading


def _direction(a: Cell, b: Cell) -> Heading:
    dx, dy = b[0] - a[0], b[1] - a[1]
    for heading, delta in DELTAS.items():
        if (dx, dy) == delta:
            return heading
    raise OffPath(f"cells {a} and {b} are not adjacent")


def plan_path(
    grid: GridMap,
    start: Cell,
    goal: Cell,
    initial_heading: Heading | None = None,
    extra_blocked: Iterable[Cell] = (),
) -> list[Cell]:
    """Shortest 4-connected path from start to goal, inclusive.

    Among equal-length paths the walk prefers continuing its previous
    direction, then North, East, South, West, so results are deterministic
    and turn-light.
    """
    blocked = grid.blocked | set(extra_blocked)
    for cell in (start, goal):
        if not grid.in_bounds(cell) or cell in blocked:
            raise Unreachable(f"cell {cell} is blocked or out of bounds")

    # Distance-to-goal map from a BFS rooted at the goal lets the forward
    # walk apply the tie-break locally.
    dist: dict[Cell, int] = {goal: 0}
    queue = deque([goal])
    while queue:
        cell = queue.popleft()
        for delta in DELTAS.values():
            nxt = (cell[0] + delta[0], cell[1] + delta[1])
            if nxt in dist or not grid.in_bounds(nxt) or nxt in blocked:
                continue
            dist[nxt] = dist[cell] + 1
            queue.append(nxt)
    if start not in dist:
        raise Unreachable(f"no path from {start} to {goal}")

    path = [start]
    heading = initial_heading
    cell = start
    while cell != goal:
        options: dict[Heading, Cell] = {}
        for h, delta in DELTAS.items():
            nxt = (cell[0] + delta[0], cell[1] + delta[1])
            if dist.get(nxt) == dist[cell] - 1:
                options[h] = nxt
        if heading in options:
            chosen = heading
        else:
            chosen = next(h for h in DELTAS if h in options)
        cell = options[chosen]
        heading = chosen
        path.append(cell)
    return path


def next_instruction(
    walker: WalkerState, path: list[Cell], dynamic_blocked: Iterable[Cell] = ()
) -> NavInstruction:
    """The single instruction for this tick.

    Turns are rotation-only; a 180-degree requirement starts with a right
    turn and completes on the following tick. An obstacle matters only once
    it sits straight ahead.
    """
    if walker.cell not in path:
        raise OffPath(f"walker at {walker.cell} is not on the path")
    index = path.index(walker.cell)
    if index == len(path) - 1:
        return NavInstruction(InstructionKind.ARRIVED)
    required = _direction(walker.cell, path[index + 1])
    if required is walker.heading:
        if path[index + 1] in set(dynamic_blocked):
            return NavInstruction(InstructionKind.STOP_OBSTACLE)
        return NavInstruction(InstructionKind.WALK_STRAIGHT)
    if required is _LEFT[walker.heading]:
        return NavInstruction(InstructionKind.TURN_LEFT)
    return NavInstruction(InstructionKind.TURN_RIGHT)


def apply_instruction(
    walker: WalkerState,
    instruction: NavInstruction,
    grid: GridMap | None = None,
    extra_blocked: Iterable[Cell] = (),
) -> WalkerState:
    """Advance the simulated walker; passing the grid enables the safety check."""
    kind = instruction.kind
    if kind is InstructionKind.TURN_LEFT:
        return WalkerState(walker.cell, _LEFT[walker.heading])
    if kind is InstructionKind.TURN_RIGHT:
        return WalkerState(walker.cell, _RIGHT[walker.heading])
    if kind is InstructionKind.WALK_STRAIGHT:
        dx, dy = DELTAS[walker.heading]
        target = (walker.cell[0] + dx, walker.cell[1] + dy)
        if grid is not None and (
            not grid.in_bounds(target)
            or target in grid.blocked
            or target in set(extra_blocked)
        ):
            raise IllegalMove(f"walk into {target}")
        return WalkerState(target, walker.heading)
    return walker  # StopObstacle and Arrived leave the walker in place


class NavSession:
    """One walk from a start cell to a named place, ticked externally."""

    def __init__(
        self,
        grid: GridMap,
        start: Cell,
        heading: Heading,
        destination_place: str,
    ):
        if destination_place not in grid.places:
            raise UnknownDestination(destination_place)
        self.grid = grid
        self.destination_place = destination_place
        self.goal = grid.places[destination_place]
        self.walker = WalkerState(start, heading)
        self.discovered: set[Cell] = set()  # obstacles hit and made permanent
        self.dynamic_blocked: set[Cell] = set()  # injected, not yet discovered
        self.done = False
        self.path = plan_path(grid, start, self.goal, initial_heading=heading)

    def inject_obstacle(self, cell: Cell) -> None:
        """Drop an obstacle into the world; the walker notices it only when
        it is straight ahead. The walker's own cell cannot be blocked."""
        if not self.grid.in_bounds(cell):
            raise ValueError(f"cell {cell} out of bounds")
        if cell == self.walker.cell:
            raise ValueError("cannot drop an obstacle on the walker")
        self.dynamic_blocked.add(cell)

    def tick(self) -> NavInstruction | None:
        """Emit and apply one instruction; None once the walk has finished."""
        if self.done:
            return None
        instruction = next_instruction(self.walker, self.path, self.dynamic_blocked)
        if instruction.kind is InstructionKind.STOP_OBSTACLE:
            index = self.path.index(self.walker.cell)
            hit = self.path[index + 1]
            self.dynamic_blocked.discard(hit)
            self.discovered.add(hit)
            try:
                self.path = plan_path(
                    self.grid,
                    self.walker.cell,
                    self.goal,
                    initial_heading=self.walker.heading,
                    extra_blocked=self.discovered | self.dynamic_blocked,
                )
            except Unreachable:
                self.done = True
                raise DestinationUnreachable(self.destination_place) from None
            return instruction
        self.walker = apply_instruction(
            self.walker,
            instruction,
            grid=self.grid,
            extra_blocked=self.discovered | self.dynamic_blocked,
        )
        if instruction.kind is InstructionKind.ARRIVED:
            self.done = True
        return instruction

    # -- persistence ----------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "destination_place": self.destination_place,
            "cell": list(self.walker.cell),
            "heading": self.walker.heading.value,
            "path": [list(c) for c in self.path],
            "discovered": [list(c) for c in sorted(self.discovered)],
            "dynamic_blocked": [list(c) for c in sorted(self.dynamic_blocked)],
            "done": self.done,
        }

    @classmethod
    def from_snapshot(cls, grid: GridMap, snap: dict) -> "NavSession":
        session = cls.__new__(cls)
        session.grid = grid
        session.destination_place = snap["destination_place"]
        session.goal = grid.places[session.destination_place]
        session.walker = WalkerState(tuple(snap["cell"]), Heading(snap["heading"]))
        session.path = [tuple(c) for c in snap["path"]]
        session.discovered = {tuple(c) for c in snap["discovered"]}
        session.dynamic_blocked = {tuple(c) for c in snap["dynamic_blocked"]}
        session.done = snap["done"]
        return session


def run_session(
    grid: GridMap,
    start: Cell,
    heading: Heading,
    destination_place: str,
    injections: Mapping[int, Iterable[Cell]] | None = None,
    max_ticks: int = 100_000,
) -> list[NavInstruction]:
    """Drive a NavSession to completion and return every instruction.

    injections maps a tick index to obstacle cells dropped just before that
    tick, mimicking asynchronous discovery mid-walk.
    """
    session = NavSession(grid, start, heading, destination_place)
    instructions: list[NavInstruction] = []
    for tick_index in range(max_ticks):
        for cell in (injections or {}).get(tick_index, ()):
            session.inject_obstacle(cell)
        instruction = session.tick()
        if instruction is None:
            break
        instructions.append(instruction)
        if session.done:
            break
    else:
        raise NavError("walk did not terminate")
    return instructions


def load_grid(path: str | Path) -> GridMap:
    """Map fixture: rows of '.' (free) and '#' (blocked), plus
    "place <x> <y> <name>" lines. ';' starts a comment line."""
    rows: list[str] = []
    places: dict[str, Cell] = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        if line.startswith("place "):
            _, x, y, name = line.split(maxsplit=3)
            places[name] = (int(x), int(y))
        elif set(line) <= {".", "#"}:
            rows.append(line)
        else:
            raise ValueError(f"{path}:{line_no}: unrecognized line {line!r}")
    if not rows:
        raise ValueError(f"{path}: no grid rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged grid rows")
    blocked = frozenset(
        (x, y) for y, row in enumerate(rows) for x, ch in enumerate(row) if ch == "#"
    )
    return GridMap(width=width, height=len(rows), blocked=blocked, places=places)
