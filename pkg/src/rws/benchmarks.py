"""Benchmark mazes and datasets used by the experiment scripts and tests."""

from __future__ import annotations

from .dataset import EXPERT, RANDOM, OfflineDataset, Trajectory
from .maze import ACTIONS, Action, Goal, Maze, State, phi, step


def corridor(length: int) -> Maze:
    """1 x length corridor starting at its left end."""
    return Maze(width=length, height=1, walls=frozenset(), start_cells=(State(0, 0),))


def open_grid(width: int, height: int) -> Maze:
    """Wall-free grid; every cell is a start cell."""
    cells = tuple(State(x, y) for y in range(height) for x in range(width))
    return Maze(width=width, height=height, walls=frozenset(), start_cells=cells)


def four_rooms(size: int = 15) -> Maze:
    """Classic four-rooms layout with one door per wall segment."""
    if size < 7 or size % 2 == 0:
        raise ValueError("four_rooms needs an odd size >= 7")
    mid = size // 2
    q1, q3 = mid // 2, mid + 1 + mid // 2
    walls = set()
    for t in range(size):
        if t not in (q1, q3):
            walls.add((mid, t))
            walls.add((t, mid))
    starts = tuple(State(x, y) for y in range(size) for x in range(size)
                   if (x, y) not in walls)
    return Maze(width=size, height=size, walls=frozenset(walls), start_cells=starts)


def walk(maze: Maze, start, actions, source: str, goal=None) -> Trajectory:
    """Trajectory from an explicit action sequence; goal defaults to the endpoint."""
    here = State(int(start[0]), int(start[1]))
    states = [here]
    for a in actions:
        here = step(maze, here, a)
        states.append(here)
    return Trajectory(states=states, actions=list(actions),
                      goal=Goal(*goal) if goal is not None else phi(states[-1]),
                      source=source)


def full_coverage_dataset(maze: Maze) -> OfflineDataset:
    """One single-step trajectory per (state, action) pair.

    Covers every transition of the maze and puts every free cell in the goal
    pool, which makes tabular training converge to the exact fixed point.
    """
    trajectories = []
    for x, y in maze.free_cells():
        for a in ACTIONS:
            trajectories.append(walk(maze, State(x, y), [a], source=RANDOM))
    return OfflineDataset(maze=maze, trajectories=trajectories)


# -- three-trajectory stitching benchmark -------------------------------------
#
# 15x15 maze with two interior wall blocks and three one-way trajectories:
#
#   A: top-right corner -> left along the top edge -> down to the bottom-left
#   B: middle-left -> straight right along the middle row
#   C: bottom-left -> right along the bottom edge -> up the right edge
#
# B starts on A's path and ends on C's path, so goals of later trajectories
# are reachable from earlier starts only by composing segments. Cells in the
# middle of B cannot reach A at all, which keeps genuinely unreachable
# state-goal pairs in the corpus.

STITCH_SIZE = 15


def stitching_maze() -> Maze:
    walls = set()
    for x in range(3, 6):
        for y in range(2, 5):
            walls.add((x, y))
    for x in range(9, 12):
        for y in range(9, 13):
            walls.add((x, y))
    starts = (State(14, 0), State(0, 7), State(0, 14))
    return Maze(width=STITCH_SIZE, height=STITCH_SIZE, walls=frozenset(walls),
                start_cells=starts)


def stitching_trajectories(maze: Maze) -> list:
    n = STITCH_SIZE - 1
    traj_a = walk(maze, State(n, 0), [Action.LEFT] * n + [Action.UP] * n, source=EXPERT)
    traj_b = walk(maze, State(0, 7), [Action.RIGHT] * n, source=EXPERT)
    traj_c = walk(maze, State(0, n), [Action.RIGHT] * n + [Action.DOWN] * 10, source=EXPERT)
    return [traj_a, traj_b, traj_c]


def stitching_dataset() -> OfflineDataset:
    maze = stitching_maze()
    return OfflineDataset(maze=maze, trajectories=stitching_trajectories(maze))
