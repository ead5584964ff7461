"""Grid world: floor-plan parsing, pathfinding, and line of sight.

The floor plan is a rectangular grid of cells.  A cell is a wall, plain
floor, or floor carrying a location label (dining area, resident room,
nurse station...).  Labels have a role: where residents live, where
nurses idle, or where appointments happen.

All queries are pure functions of the map.  Distance fields are cached
internally, so repeated path queries against the same target are O(path
length); the cache never changes observable results.
"""

from __future__ import annotations

import re
from array import array
from collections import deque
from typing import Iterator, NamedTuple

WALL = "#"
FLOOR = "."
COMMENT = ";"

ROLE_PWD_HOME = "pwd_home"
ROLE_NURSE_BASE = "nurse_base"
ROLE_APPOINTMENT_SITE = "appointment_site"
ROLES = (ROLE_PWD_HOME, ROLE_NURSE_BASE, ROLE_APPOINTMENT_SITE)

# Fixed neighbor preference (up, right, down, left).  Path tie-breaking
# follows this order so replays are byte-identical.
NEIGHBOR_ORDER = ((0, -1), (1, 0), (0, 1), (-1, 0))

_LABEL_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.-]*$")


class MapError(ValueError):
    """Base class for floor-plan validation failures."""


class RaggedGridError(MapError):
    """Map lines are not all the same length."""


class UnknownGlyphError(MapError):
    """Map contains a character that is neither reserved nor in the legend."""


class DisconnectedMapError(MapError):
    """Labeled cells are not mutually reachable over floor cells."""


class MissingRoleError(MapError):
    """A role requirement on labeled cells is violated."""


class UnreachableError(ValueError):
    """No path exists between the queried positions."""


class Position(NamedTuple):
    x: int
    y: int


class GridMap:
    """Immutable 2-D orthogonal grid with labeled locations.

    ``cells`` is row-major; each entry is ``WALL``, ``FLOOR``, or a label
    string.  Construction validates every structural invariant; after
    that instances are safe to share between concurrent runs.
    """

    def __init__(self, width: int, height: int, cells: list[str],
                 roles: dict[str, str], glyphs: dict[str, str]):
        if width <= 0 or height <= 0:
            raise MapError("map must have positive dimensions")
        if len(cells) != width * height:
            raise MapError("cell array does not match dimensions")
        self.width = width
        self.height = height
        self.cells = tuple(cells)
        self.roles = dict(roles)
        self.glyphs = dict(glyphs)

        locations: dict[str, list[Position]] = {}
        for i, cell in enumerate(self.cells):
            if cell != WALL and cell != FLOOR:
                locations.setdefault(cell, []).append(Position(i % width, i // width))
        self.locations: dict[str, tuple[Position, ...]] = {
            label: tuple(cells_) for label, cells_ in locations.items()
        }
        for label in self.locations:
            if label not in self.roles:
                raise MapError(f"label {label!r} has no role")

        # Traversability flags, row-major.
        self._open = bytes(0 if c == WALL else 1 for c in self.cells)
        self._validate()

        # Distance-field caches keyed by target cell index / label.
        self._cell_fields: dict[int, array] = {}
        self._label_fields: dict[str, array] = {}

    # -- validation ----------------------------------------------------

    def _validate(self) -> None:
        for label, role in self.roles.items():
            if role not in ROLES:
                raise MapError(f"unknown role {role!r} for label {label!r}")
        for label, role in self.roles.items():
            placed = self.locations.get(label, ())
            if role == ROLE_PWD_HOME:
                if not placed:
                    raise MissingRoleError(f"pwd_home label {label!r} is not on the map")
                if len(placed) != 1:
                    raise MissingRoleError(
                        f"pwd_home label {label!r} must cover exactly one cell, found {len(placed)}")
        labeled = [p for cells_ in self.locations.values() for p in cells_]
        if labeled:
            reached = self._flood_fill(labeled[0])
            for p in labeled:
                if p.y * self.width + p.x not in reached:
                    raise DisconnectedMapError(
                        f"labeled cell at ({p.x},{p.y}) is unreachable from other labeled cells")

    def _flood_fill(self, start: Position) -> set[int]:
        w, h, is_open = self.width, self.height, self._open
        seen = {start.y * w + start.x}
        queue = deque(seen)
        while queue:
            i = queue.popleft()
            x = i % w
            y = i // w
            for dx, dy in NEIGHBOR_ORDER:
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h:
                    j = ny * w + nx
                    if is_open[j] and j not in seen:
                        seen.add(j)
                        queue.append(j)
        return seen

    # -- basic queries -------------------------------------------------

    def in_bounds(self, pos: Position) -> bool:
        return 0 <= pos.x < self.width and 0 <= pos.y < self.height

    def cell_at(self, pos: Position) -> str:
        return self.cells[pos.y * self.width + pos.x]

    def is_open(self, pos: Position) -> bool:
        return bool(self._open[pos.y * self.width + pos.x])

    def cells_of(self, label: str) -> tuple[Position, ...]:
        return self.locations[label]

    def labels_with_role(self, role: str) -> list[str]:
        return sorted(label for label, r in self.roles.items()
                      if r == role and label in self.locations)

    def only_cell(self, label: str) -> Position:
        cells = self.locations[label]
        if len(cells) != 1:
            raise MapError(f"label {label!r} covers {len(cells)} cells, expected one")
        return cells[0]

    # -- distance fields -----------------------------------------------

    def _bfs(self, sources: list[int]) -> array:
        w = self.width
        size = w * self.height
        is_open = self._open
        dist = array("i", [-1]) * size
        queue = deque()
        for s in sources:
            if is_open[s] and dist[s] < 0:
                dist[s] = 0
                queue.append(s)
        while queue:
            i = queue.popleft()
            d = dist[i] + 1
            x = i % w
            if i >= w:
                j = i - w
                if is_open[j] and dist[j] < 0:
                    dist[j] = d
                    queue.append(j)
            if x + 1 < w:
                j = i + 1
                if is_open[j] and dist[j] < 0:
                    dist[j] = d
                    queue.append(j)
            if i + w < size:
                j = i + w
                if is_open[j] and dist[j] < 0:
                    dist[j] = d
                    queue.append(j)
            if x > 0:
                j = i - 1
                if is_open[j] and dist[j] < 0:
                    dist[j] = d
                    queue.append(j)
        return dist

    def _field_to_cell(self, target: Position) -> array:
        i = target.y * self.width + target.x
        field = self._cell_fields.get(i)
        if field is None:
            field = self._bfs([i])
            self._cell_fields[i] = field
        return field

    def _field_to_label(self, label: str) -> array:
        field = self._label_fields.get(label)
        if field is None:
            cells = self.locations[label]
            field = self._bfs([p.y * self.width + p.x for p in cells])
            self._label_fields[label] = field
        return field

    def _descend(self, field: array, pos: Position) -> Position:
        w = self.width
        x, y = pos
        i = y * w + x
        d = field[i]
        if d < 0:
            raise UnreachableError(f"no path from ({x},{y}) to target")
        if d == 0:
            return pos
        d -= 1
        if y > 0 and field[i - w] == d:
            return Position(x, y - 1)
        if x + 1 < w and field[i + 1] == d:
            return Position(x + 1, y)
        if y + 1 < self.height and field[i + w] == d:
            return Position(x, y + 1)
        if x > 0 and field[i - 1] == d:
            return Position(x - 1, y)
        raise AssertionError("BFS field has no descent neighbor")  # pragma: no cover

    def distance(self, origin: Position, target: Position) -> int:
        """Shortest 4-connected path length in steps, or raise Unreachable."""
        d = self._field_to_cell(target)[origin.y * self.width + origin.x]
        if d < 0:
            raise UnreachableError(f"no path from {origin} to {target}")
        return d

    def label_distance(self, origin: Position, label: str) -> int:
        """Steps to the nearest cell carrying ``label``."""
        d = self._field_to_label(label)[origin.y * self.width + origin.x]
        if d < 0:
            raise UnreachableError(f"no path from {origin} to label {label!r}")
        return d

    def step_toward_cell(self, pos: Position, target: Position) -> Position:
        """One step along a shortest path to ``target`` (stays put on arrival)."""
        return self._descend(self._field_to_cell(target), pos)

    def step_toward_label(self, pos: Position, label: str) -> Position:
        return self._descend(self._field_to_label(label), pos)

    def at_label(self, pos: Position, label: str) -> bool:
        return self.cells[pos.y * self.width + pos.x] == label

    # -- pickling (drop caches; they are pure accelerators) -------------

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_cell_fields"] = {}
        state["_label_fields"] = {}
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)


# -- parsing / serialization -------------------------------------------


def parse_map(text: str, legend: dict[str, tuple[str, str]] | None = None) -> GridMap:
    """Parse a plain-text floor plan.

    Reserved glyphs: ``#`` wall, ``.`` floor; lines starting with ``;``
    are comments.  Every other glyph must appear in ``legend`` as
    ``glyph -> (label, role)``.
    """
    legend = legend or {}
    glyph_of: dict[str, str] = {}
    for glyph, (label, role) in legend.items():
        if len(glyph) != 1 or glyph in (WALL, FLOOR, COMMENT) or glyph.isspace():
            raise MapError(f"invalid legend glyph {glyph!r}")
        if not _LABEL_RE.match(label):
            raise MapError(f"invalid label {label!r}")
        if role not in ROLES:
            raise MapError(f"unknown role {role!r} for glyph {glyph!r}")
        if label in glyph_of:
            raise MapError(f"label {label!r} mapped from two glyphs")
        glyph_of[label] = glyph

    lines = [line for line in text.splitlines()
             if line and not line.startswith(COMMENT)]
    if not lines:
        raise MapError("map has no grid lines")
    width = len(lines[0])
    for line in lines:
        if len(line) != width:
            raise RaggedGridError(
                f"line length {len(line)} differs from first line length {width}")

    cells: list[str] = []
    roles: dict[str, str] = {}
    for line in lines:
        for ch in line:
            if ch == WALL or ch == FLOOR:
                cells.append(ch)
            elif ch in legend:
                label, role = legend[ch]
                cells.append(label)
                roles[label] = role
            else:
                raise UnknownGlyphError(f"glyph {ch!r} not in legend or reserved set")

    # A declared pwd_home must actually be placed; GridMap checks the rest.
    placed = set(cells)
    for glyph, (label, role) in legend.items():
        if role == ROLE_PWD_HOME and label not in placed:
            raise MissingRoleError(f"pwd_home label {label!r} is declared but absent")
        roles.setdefault(label, role)

    return GridMap(width, len(lines), cells, roles, glyph_of)


def serialize_map(grid: GridMap) -> str:
    """Inverse of :func:`parse_map` on the cell array."""
    out = []
    for y in range(grid.height):
        row = []
        for x in range(grid.width):
            cell = grid.cells[y * grid.width + x]
            if cell == WALL or cell == FLOOR:
                row.append(cell)
            else:
                row.append(grid.glyphs[cell])
        out.append("".join(row))
    return "\n".join(out) + "\n"


# -- pathfinding / perception ------------------------------------------


def shortest_path(grid: GridMap, origin: Position, goal: Position) -> list[Position]:
    """Minimum-length 4-connected path, origin and goal inclusive.

    Ties between equal-length paths are broken by the fixed neighbor
    order (up, right, down, left), so results are replay-stable.  The
    number of steps is ``len(path) - 1``.
    """
    for pos in (origin, goal):
        if not grid.in_bounds(pos):
            raise MapError(f"position {pos} out of bounds")
        if not grid.is_open(pos):
            raise MapError(f"position {pos} is a wall")
    path = [Position(*origin)]
    pos = Position(*origin)
    goal = Position(*goal)
    field = grid._field_to_cell(goal)
    if field[pos.y * grid.width + pos.x] < 0:
        raise UnreachableError(f"no path from {origin} to {goal}")
    while pos != goal:
        pos = grid._descend(field, pos)
        path.append(pos)
    return path


def ray_cells(a: Position, b: Position) -> Iterator[Position]:
    """Cells crossed by the discrete ray between the centers of a and b.

    Integer line stepping; whenever the ray advances diagonally, both
    flanking cells are reported as crossed, so corner grazing counts as
    contact (conservative perception).
    """
    x, y = a.x, a.y
    dx = abs(b.x - a.x)
    dy = abs(b.y - a.y)
    sx = 1 if b.x >= a.x else -1
    sy = 1 if b.y >= a.y else -1
    err = dx - dy
    yield Position(x, y)
    while x != b.x or y != b.y:
        e2 = 2 * err
        step_x = e2 > -dy and x != b.x
        step_y = e2 < dx and y != b.y
        if step_x and step_y:
            yield Position(x + sx, y)
            yield Position(x, y + sy)
            x += sx
            y += sy
            err += dx - dy
        elif step_x:
            x += sx
            err -= dy
        else:
            y += sy
            err += dx
        yield Position(x, y)


def line_of_sight(grid: GridMap, a: Position, b: Position, radius: float) -> bool:
    """True iff b is within Euclidean ``radius`` of a and no wall blocks the ray."""
    for pos in (a, b):
        if not grid.in_bounds(pos):
            raise MapError(f"position {pos} out of bounds")
    dx = b.x - a.x
    dy = b.y - a.y
    if dx * dx + dy * dy > radius * radius:
        return False
    cells = grid.cells
    w = grid.width
    for pos in ray_cells(a, b):
        if cells[pos.y * w + pos.x] == WALL:
            return False
    return True
