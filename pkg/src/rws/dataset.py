"""Offline goal-conditioned trajectory corpora: generation, storage, sampling.

A dataset is an immutable collection of trajectories over one maze, plus a
flat index of every (s_t, a_t) transition and a goal pool holding phi(s) for
every stored state. All sampling draws with replacement from seeded numpy
generators, so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .maze import (
    ACTIONS,
    Action,
    Goal,
    Maze,
    MazeError,
    State,
    bfs_distances,
    cell_index,
    phi,
    step,
)


class DatasetError(ValueError):
    """Base class for dataset construction and IO failures."""


class UnreachableGoalError(DatasetError):
    """Expert generation asked for a goal with no path from the start."""


class DatasetParseError(DatasetError):
    """Dataset file is malformed; message carries the offending line number."""


class DatasetValidationError(DatasetError):
    """Stored trajectory violates the maze dynamics or its source contract."""


class EmptyDatasetError(DatasetError):
    """Sampling from a dataset with no transitions (or empty goal pool)."""


EXPERT, RANDOM = "expert", "random"


@dataclass
class Trajectory:
    """One goal-conditioned episode: L+1 states, L actions, a goal, a source tag."""

    states: list
    actions: list
    goal: Goal
    source: str

    @property
    def n_steps(self) -> int:
        return len(self.actions)

    def validate(self, maze: Maze) -> None:
        if self.source not in (EXPERT, RANDOM):
            raise DatasetValidationError(f"unknown trajectory source {self.source!r}")
        if len(self.states) != len(self.actions) + 1:
            raise DatasetValidationError(
                f"{len(self.states)} states vs {len(self.actions)} actions")
        if not maze.is_free(self.goal[0], self.goal[1]):
            raise DatasetValidationError(f"goal {tuple(self.goal)} is a wall or out of bounds")
        for t, a in enumerate(self.actions):
            expected = step(maze, self.states[t], a)
            if tuple(self.states[t + 1]) != tuple(expected):
                raise DatasetValidationError(
                    f"step {t}: {tuple(self.states[t])} --{Action(a).name}--> "
                    f"{tuple(self.states[t + 1])} contradicts dynamics ({tuple(expected)})")
        if self.source == EXPERT and tuple(phi(self.states[-1])) != tuple(self.goal):
            raise DatasetValidationError(
                f"expert trajectory ends at {tuple(self.states[-1])}, goal is {tuple(self.goal)}")


@dataclass(eq=False)
class OfflineDataset:
    """Static training corpus: trajectories plus flat transition/goal indices.

    Construction validates every trajectory against the maze dynamics and
    precomputes flat arrays so transition and goal sampling are O(batch).
    """

    maze: Maze
    trajectories: list
    # derived flat views, filled at construction
    states_xy: np.ndarray = field(init=False, repr=False)
    state_off: np.ndarray = field(init=False, repr=False)
    traj_len: np.ndarray = field(init=False, repr=False)
    trans_traj: np.ndarray = field(init=False, repr=False)
    trans_step: np.ndarray = field(init=False, repr=False)
    trans_s: np.ndarray = field(init=False, repr=False)
    trans_a: np.ndarray = field(init=False, repr=False)
    trans_s2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for i, traj in enumerate(self.trajectories):
            try:
                traj.validate(self.maze)
            except DatasetValidationError as e:
                raise DatasetValidationError(f"trajectory {i}: {e}") from None
        states, offs, lens = [], [0], []
        traj_ids, steps = [], []
        actions = []
        for i, traj in enumerate(self.trajectories):
            states.extend((s[0], s[1]) for s in traj.states)
            offs.append(offs[-1] + len(traj.states))
            lens.append(traj.n_steps)
            traj_ids.extend([i] * traj.n_steps)
            steps.extend(range(traj.n_steps))
            actions.extend(int(a) for a in traj.actions)
        self.states_xy = np.asarray(states, dtype=np.int64).reshape(-1, 2)
        self.state_off = np.asarray(offs, dtype=np.int64)
        self.traj_len = np.asarray(lens, dtype=np.int64)
        self.trans_traj = np.asarray(traj_ids, dtype=np.int64)
        self.trans_step = np.asarray(steps, dtype=np.int64)
        src = self.state_off[self.trans_traj] + self.trans_step
        self.trans_s = self.states_xy[src]
        self.trans_s2 = self.states_xy[src + 1]
        self.trans_a = np.asarray(actions, dtype=np.int64)

    @property
    def n_transitions(self) -> int:
        return int(self.trans_traj.shape[0])

    @property
    def flat_index(self) -> list:
        """Every (trajectory id, step index) pair, trajectory-major."""
        return list(zip(self.trans_traj.tolist(), self.trans_step.tolist()))

    @property
    def goal_pool(self) -> list:
        """phi(s) for every stored state, trajectory-major."""
        return [Goal(int(x), int(y)) for x, y in self.states_xy]


@dataclass
class TransitionBatch:
    """Sampled transitions as parallel arrays; iterates as typed tuples."""

    s: np.ndarray        # (n, 2)
    a: np.ndarray        # (n,)
    s2: np.ndarray       # (n, 2)
    traj_id: np.ndarray  # (n,)
    step: np.ndarray     # (n,)

    def __len__(self) -> int:
        return int(self.a.shape[0])

    def __iter__(self) -> Iterator:
        for i in range(len(self)):
            yield (State(int(self.s[i, 0]), int(self.s[i, 1])),
                   Action(int(self.a[i])),
                   State(int(self.s2[i, 0]), int(self.s2[i, 1])),
                   int(self.traj_id[i]),
                   int(self.step[i]))


# -- generation -------------------------------------------------------------


def generate_expert(maze: Maze, start: State, goal: Goal, rng=None) -> Trajectory:
    """Shortest path from start to goal by breadth-first search.

    Ties among equally short successors are broken by the fixed action
    enumeration order, so the path is unique and rng is never consumed.
    """
    dist = bfs_distances(maze, goal)
    here = State(int(start[0]), int(start[1]))
    if not maze.is_free(here.x, here.y) or dist[cell_index(maze.width, here.x, here.y)] < 0:
        raise UnreachableGoalError(f"goal {tuple(goal)} not reachable from start {tuple(start)}")
    states, actions = [here], []
    while dist[cell_index(maze.width, here.x, here.y)] > 0:
        d = dist[cell_index(maze.width, here.x, here.y)]
        for a in ACTIONS:
            nxt = step(maze, here, a)
            if dist[cell_index(maze.width, nxt.x, nxt.y)] == d - 1:
                actions.append(a)
                states.append(nxt)
                here = nxt
                break
    return Trajectory(states=states, actions=actions, goal=Goal(int(goal[0]), int(goal[1])),
                      source=EXPERT)


def generate_random(maze: Maze, start: State, length: int, rng) -> Trajectory:
    """Uniform-random walk; the goal is phi of a uniformly chosen visited state."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    here = State(int(start[0]), int(start[1]))
    states = [here]
    actions = []
    for a in rng.integers(0, len(ACTIONS), size=length):
        act = Action(int(a))
        here = step(maze, here, act)
        actions.append(act)
        states.append(here)
    goal = phi(states[int(rng.integers(0, length + 1))])
    return Trajectory(states=states, actions=actions, goal=goal, source=RANDOM)


def build_mixture(maze: Maze, expert_ratio: float, n_traj: int, rng,
                  random_length: int = 30) -> OfflineDataset:
    """Dataset of round(expert_ratio * n_traj) expert plus random trajectories.

    Expert episodes use uniformly sampled (start, goal) pairs with the goal
    drawn from the cells reachable from the start; random episodes are
    uniform walks of ``random_length`` steps. Starts come from the maze's
    start cells.
    """
    if not 0.0 <= expert_ratio <= 1.0:
        raise ValueError(f"expert_ratio must be in [0, 1], got {expert_ratio}")
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    n_expert = round(expert_ratio * n_traj)
    reachable_from = {}
    trajectories = []
    for _ in range(n_expert):
        start = maze.start_cells[int(rng.integers(0, len(maze.start_cells)))]
        if start not in reachable_from:
            dist = bfs_distances(maze, start)
            cells = np.flatnonzero(dist > 0)
            reachable_from[start] = [(int(c % maze.width), int(c // maze.width)) for c in cells]
        goals = reachable_from[start]
        gx, gy = goals[int(rng.integers(0, len(goals)))]
        trajectories.append(generate_expert(maze, start, Goal(gx, gy), rng))
    for _ in range(n_traj - n_expert):
        start = maze.start_cells[int(rng.integers(0, len(maze.start_cells)))]
        trajectories.append(generate_random(maze, start, random_length, rng))
    return OfflineDataset(maze=maze, trajectories=trajectories)


# -- serialization -----------------------------------------------------------

_HEADER_PREFIX = "#maze"
_GRID_PREFIX = "#grid"


def save(dataset: OfflineDataset, path) -> None:
    """Write the line-delimited dataset format (see load)."""
    maze = dataset.maze
    lines = [f"{_HEADER_PREFIX} {maze.text_hash()} {maze.width} {maze.height}"]
    for row in maze.to_text().splitlines()[1:]:
        lines.append(f"{_GRID_PREFIX} {row}")
    for traj in dataset.trajectories:
        parts = [traj.source, f"{traj.goal[0]},{traj.goal[1]}"]
        for t, a in enumerate(traj.actions):
            parts.append(f"{traj.states[t][0]},{traj.states[t][1]}")
            parts.append(str(int(a)))
        parts.append(f"{traj.states[-1][0]},{traj.states[-1][1]}")
        lines.append(";".join(parts))
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def _parse_cell(token: str, lineno: int) -> tuple[int, int]:
    pieces = token.split(",")
    if len(pieces) != 2:
        raise DatasetParseError(f"line {lineno}: expected 'x,y', got {token!r}")
    try:
        return int(pieces[0]), int(pieces[1])
    except ValueError:
        raise DatasetParseError(f"line {lineno}: non-integer coordinate {token!r}") from None


def load(path, maze: Maze | None = None) -> OfflineDataset:
    """Read a dataset file, rebuilding the maze from its embedded grid rows.

    Each record line is ``source;gx,gy;x0,y0;a0;x1,y1;a1;...;xL,yL``. The
    header line ``#maze <hash> <width> <height>`` is followed by ``height``
    ``#grid`` rows carrying the maze, so a dataset file is self-contained.
    If ``maze`` is supplied its hash must match the header.
    """
    with open(path, "r", encoding="ascii") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith(_HEADER_PREFIX + " "):
        raise DatasetParseError(f"line 1: missing '{_HEADER_PREFIX}' header")
    header = lines[0].split()
    if len(header) != 4:
        raise DatasetParseError("line 1: expected '#maze <hash> <width> <height>'")
    try:
        width, height = int(header[2]), int(header[3])
    except ValueError:
        raise DatasetParseError("line 1: width/height must be integers") from None
    grid_rows = []
    for y in range(height):
        lineno = 2 + y
        if lineno - 1 >= len(lines) or not lines[lineno - 1].startswith(_GRID_PREFIX + " "):
            raise DatasetParseError(f"line {lineno}: expected '{_GRID_PREFIX}' row")
        grid_rows.append(lines[lineno - 1][len(_GRID_PREFIX) + 1:])
    try:
        embedded = Maze.from_text(f"{width} {height}\n" + "\n".join(grid_rows) + "\n")
    except MazeError as e:
        raise DatasetParseError(f"embedded maze invalid: {e}") from None
    if embedded.text_hash() != header[1]:
        raise DatasetParseError(f"line 1: maze hash {header[1]} does not match embedded grid")
    if maze is not None and maze.text_hash() != header[1]:
        raise DatasetParseError(
            f"line 1: dataset maze hash {header[1]} does not match supplied maze")
    maze = maze if maze is not None else embedded

    trajectories = []
    for i, line in enumerate(lines[1 + height:]):
        lineno = 2 + height + i
        if not line.strip():
            continue
        tokens = line.split(";")
        if len(tokens) < 3 or len(tokens) % 2 == 0:
            raise DatasetParseError(f"line {lineno}: truncated trajectory record")
        source = tokens[0]
        gx, gy = _parse_cell(tokens[1], lineno)
        states = []
        actions = []
        for j in range(2, len(tokens) - 1, 2):
            x, y = _parse_cell(tokens[j], lineno)
            states.append(State(x, y))
            try:
                actions.append(Action(int(tokens[j + 1])))
            except ValueError:
                raise DatasetParseError(f"line {lineno}: bad action {tokens[j + 1]!r}") from None
        x, y = _parse_cell(tokens[-1], lineno)
        states.append(State(x, y))
        traj = Trajectory(states=states, actions=actions, goal=Goal(gx, gy), source=source)
        try:
            traj.validate(maze)
        except DatasetValidationError as e:
            raise DatasetValidationError(f"line {lineno}: {e}") from None
        trajectories.append(traj)
    return OfflineDataset(maze=maze, trajectories=trajectories)


# -- sampling ----------------------------------------------------------------


def sample_transitions(dataset: OfflineDataset, n: int, rng) -> TransitionBatch:
    """n independent uniform draws (with replacement) from the flat index."""
    if dataset.n_transitions == 0:
        raise EmptyDatasetError("dataset has no transitions")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    idx = rng.integers(0, dataset.n_transitions, size=n)
    return TransitionBatch(
        s=dataset.trans_s[idx],
        a=dataset.trans_a[idx],
        s2=dataset.trans_s2[idx],
        traj_id=dataset.trans_traj[idx],
        step=dataset.trans_step[idx],
    )


def sample_goals_uniform(dataset: OfflineDataset, n: int, rng) -> np.ndarray:
    """n uniform goal draws from the goal pool, as an (n, 2) coordinate array."""
    if dataset.states_xy.shape[0] == 0:
        raise EmptyDatasetError("dataset goal pool is empty")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    idx = rng.integers(0, dataset.states_xy.shape[0], size=n)
    return dataset.states_xy[idx]
