"""Deterministic gridworld mazes: states, goals, actions, sparse reward.

Coordinates are integer cell indices with x in [0, width) and y in
[0, height). Maze text files put row y=0 on the first grid line.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, NamedTuple

import numpy as np


class MazeError(ValueError):
    """Malformed maze definition or maze file."""


class InvalidStateError(MazeError):
    """State is outside the grid or inside a wall."""


class State(NamedTuple):
    x: int
    y: int


class Goal(NamedTuple):
    x: int
    y: int


class Action(IntEnum):
    """Grid moves, in the fixed enumeration order used for tie-breaking."""

    UP = 0     # +y
    DOWN = 1   # -y
    LEFT = 2   # -x
    RIGHT = 3  # +x


ACTIONS: tuple[Action, ...] = tuple(Action)
N_ACTIONS = len(ACTIONS)

# Displacement per action, indexed by Action value.
DX = np.array([0, 0, -1, 1], dtype=np.int64)
DY = np.array([1, -1, 0, 0], dtype=np.int64)

_WALL, _FREE, _START = "#", ".", "S"


@dataclass(frozen=True)
class Maze:
    """Rectangular grid with blocking walls and designated start cells.

    Invariants enforced at construction: start cells are free, the grid has
    at least two cells, and every free cell has at least one free neighbor
    (no isolated cells, so any start admits a nondegenerate trajectory).
    """

    width: int
    height: int
    walls: frozenset
    start_cells: tuple

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.width * self.height < 2:
            raise MazeError(f"grid {self.width}x{self.height} is too small")
        object.__setattr__(self, "walls", frozenset((int(x), int(y)) for x, y in self.walls))
        object.__setattr__(self, "start_cells", tuple(State(int(x), int(y)) for x, y in self.start_cells))
        for x, y in self.walls:
            if not self.in_bounds(x, y):
                raise MazeError(f"wall ({x},{y}) out of bounds")
        if not self.start_cells:
            raise MazeError("maze needs at least one start cell")
        for s in self.start_cells:
            if not self.is_free(s.x, s.y):
                raise MazeError(f"start cell {tuple(s)} is a wall or out of bounds")
        for x, y in self.free_cells():
            if not any(self.is_free(x + int(DX[a]), y + int(DY[a])) for a in ACTIONS):
                raise MazeError(f"free cell ({x},{y}) has no free neighbor")

    # -- geometry ---------------------------------------------------------

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and (x, y) not in self.walls

    def free_cells(self) -> Iterator[tuple[int, int]]:
        """All non-wall cells in row-major (y, then x) order."""
        for y in range(self.height):
            for x in range(self.width):
                if (x, y) not in self.walls:
                    yield (x, y)

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    # -- text format ------------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "Maze":
        """Parse the plain-text maze format.

        First line is ``width height``; then ``height`` rows of ``#`` (wall),
        ``.`` (free) or ``S`` (start, also free). Row 0 is y=0.
        """
        lines = text.splitlines()
        if not lines:
            raise MazeError("line 1: empty maze file")
        header = lines[0].split()
        if len(header) != 2:
            raise MazeError("line 1: expected 'width height'")
        try:
            width, height = int(header[0]), int(header[1])
        except ValueError:
            raise MazeError("line 1: width and height must be integers") from None
        if len(lines) < 1 + height:
            raise MazeError(f"line {len(lines) + 1}: expected {height} grid rows, got {len(lines) - 1}")
        walls, starts = set(), []
        for y in range(height):
            row = lines[1 + y]
            if len(row) != width:
                raise MazeError(f"line {y + 2}: row has {len(row)} cells, expected {width}")
            for x, ch in enumerate(row):
                if ch == _WALL:
                    walls.add((x, y))
                elif ch == _START:
                    starts.append((x, y))
                elif ch != _FREE:
                    raise MazeError(f"line {y + 2}: unknown cell character {ch!r}")
        return cls(width=width, height=height, walls=frozenset(walls), start_cells=tuple(starts))

    @classmethod
    def from_file(cls, path) -> "Maze":
        with open(path, "r", encoding="ascii") as f:
            return cls.from_text(f.read())

    def to_text(self) -> str:
        starts = set(map(tuple, self.start_cells))
        rows = []
        for y in range(self.height):
            rows.append("".join(
                _WALL if (x, y) in self.walls else _START if (x, y) in starts else _FREE
                for x in range(self.width)))
        return f"{self.width} {self.height}\n" + "\n".join(rows) + "\n"

    def text_hash(self) -> str:
        """Stable identity of this maze (hash of its canonical text form)."""
        return hashlib.sha256(self.to_text().encode("ascii")).hexdigest()[:16]


# -- cell indexing ---------------------------------------------------------


def cell_index(width: int, x: int, y: int) -> int:
    return y * width + x


def cell_indices(width: int, xy: np.ndarray) -> np.ndarray:
    """Vectorized cell index for an (..., 2) array of (x, y) coordinates."""
    xy = np.asarray(xy)
    return xy[..., 1] * width + xy[..., 0]


# -- dynamics, goal mapping, reward -----------------------------------------


def step(maze: Maze, s: State, a: Action) -> State:
    """Deterministic blocking move: walls and borders leave the state unchanged."""
    if not maze.is_free(s[0], s[1]):
        raise InvalidStateError(f"malformed state {tuple(s)}: wall or out of bounds")
    nx, ny = s[0] + int(DX[a]), s[1] + int(DY[a])
    if maze.is_free(nx, ny):
        return State(nx, ny)
    return State(s[0], s[1])


def phi(s: State) -> Goal:
    """State-to-goal mapping: the goal occupying the same cell."""
    return Goal(s[0], s[1])


def reward(s: State, g: Goal, delta: float) -> float:
    """0 when the squared distance from phi(s) to g is strictly below delta, else -1."""
    d2 = (s[0] - g[0]) ** 2 + (s[1] - g[1]) ** 2
    return 0.0 if d2 < delta else -1.0


def is_terminal(s: State, g: Goal, delta: float) -> bool:
    return reward(s, g, delta) == 0.0


def bfs_distances(maze: Maze, origin) -> np.ndarray:
    """Shortest step counts from origin to every cell (-1 where unreachable).

    Neighbors are explored in action enumeration order, so discovery order
    is deterministic.
    """
    if not maze.is_free(origin[0], origin[1]):
        raise InvalidStateError(f"malformed state {tuple(origin)}: wall or out of bounds")
    dist = np.full(maze.n_cells, -1, dtype=np.int64)
    dist[cell_index(maze.width, origin[0], origin[1])] = 0
    queue = deque([(int(origin[0]), int(origin[1]))])
    while queue:
        x, y = queue.popleft()
        d = dist[cell_index(maze.width, x, y)]
        for a in ACTIONS:
            nx, ny = x + int(DX[a]), y + int(DY[a])
            if maze.is_free(nx, ny) and dist[cell_index(maze.width, nx, ny)] < 0:
                dist[cell_index(maze.width, nx, ny)] = d + 1
                queue.append((nx, ny))
    return dist
