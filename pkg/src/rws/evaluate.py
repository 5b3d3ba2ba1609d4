"""Policy rollouts, success metrics, the dataset reachability oracle,
weight heatmaps, and multi-seed sampler comparisons."""

from __future__ import annotations

import dataclasses
import math
import os
from collections import deque
from dataclasses import dataclass

import numpy as np

from .dataset import OfflineDataset
from .maze import Goal, Maze, State, cell_index, cell_indices, is_terminal, phi, step
from .reach import ReachabilityClassifier, score
from .trainer import TrainerConfig, train
from .value import GoalConditionedQ, PolicyTable, policy_action
from .weight import sampling_weights

PAIR_MODES = ("stitching", "in_trajectory")


def rollout(policy: PolicyTable, maze: Maze, start: State, goal: Goal,
            delta: float, max_steps: int) -> tuple[bool, int]:
    """Greedy rollout; returns (reached goal, first hit time or max_steps)."""
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    here = State(int(start[0]), int(start[1]))
    if is_terminal(here, goal, delta):
        return True, 0
    for t in range(1, max_steps + 1):
        here = step(maze, here, policy_action(policy, here, goal))
        if is_terminal(here, goal, delta):
            return True, t
    return False, max_steps


def success_rate(policy: PolicyTable, maze: Maze, eval_pairs, delta: float,
                 max_steps: int) -> float:
    if not eval_pairs:
        raise ValueError("eval_pairs must be nonempty")
    hits = sum(rollout(policy, maze, s, g, delta, max_steps)[0] for s, g in eval_pairs)
    return hits / len(eval_pairs)


def reachability_oracle(maze: Maze, dataset: OfflineDataset, start: State) -> set:
    """Ground-truth reachability over the dataset transition graph.

    BFS closure from start along exactly the (s -> s') edges stored in the
    dataset; returns phi of every reachable state (including the start).
    """
    adjacency = {}
    for s_xy, s2_xy in zip(dataset.trans_s, dataset.trans_s2):
        adjacency.setdefault((int(s_xy[0]), int(s_xy[1])), set()).add(
            (int(s2_xy[0]), int(s2_xy[1])))
    origin = (int(start[0]), int(start[1]))
    seen = {origin}
    queue = deque([origin])
    while queue:
        cell = queue.popleft()
        for nxt in adjacency.get(cell, ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return {Goal(x, y) for x, y in seen}


def make_eval_pairs(dataset: OfflineDataset, mode: str, n: int, rng) -> list:
    """Draw (start, goal) evaluation pairs from the dataset trajectories.

    stitching: start and goal come from two different trajectories (the
    start state of one, the stored goal of another), forcing composition.
    in_trajectory: start and goal come from the same trajectory.
    """
    if mode not in PAIR_MODES:
        raise ValueError(f"pairs mode must be one of {PAIR_MODES}, got {mode!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    n_traj = len(dataset.trajectories)
    if mode == "stitching" and n_traj < 2:
        raise ValueError("stitching pairs need at least two trajectories")
    pairs = []
    for _ in range(n):
        i = int(rng.integers(0, n_traj))
        if mode == "stitching":
            j = int(rng.integers(0, n_traj - 1))
            j = j + 1 if j >= i else j
        else:
            j = i
        start = dataset.trajectories[i].states[0]
        goal = dataset.trajectories[j].goal
        pairs.append((State(int(start[0]), int(start[1])), Goal(int(goal[0]), int(goal[1]))))
    return pairs


def feasible_mask(maze: Maze, dataset: OfflineDataset, pairs) -> list:
    """Per-pair feasibility according to the dataset reachability oracle."""
    cache = {}
    out = []
    for start, goal in pairs:
        key = (int(start[0]), int(start[1]))
        if key not in cache:
            cache[key] = reachability_oracle(maze, dataset, start)
        out.append(Goal(int(goal[0]), int(goal[1])) in cache[key])
    return out


def weight_heatmap(state: State, q: GoalConditionedQ,
                   classifier: ReachabilityClassifier, maze: Maze,
                   policy: PolicyTable | None = None,
                   average_actions: bool = False) -> np.ndarray:
    """Normalized sampling weight of every goal cell, seen from one state.

    For each non-wall goal the score is taken at the greedy action (from the
    policy when given, otherwise the argmax of Q), or averaged over all four
    actions with ``average_actions``. Weights are normalized over all free
    cells, so their mean is 1; wall cells hold NaN.
    """
    if not maze.is_free(state[0], state[1]):
        raise ValueError(f"heatmap state {tuple(state)} is a wall or out of bounds")
    free = np.asarray(list(maze.free_cells()), dtype=np.int64)
    si = cell_index(maze.width, int(state[0]), int(state[1]))
    gi = cell_indices(maze.width, free)
    q_rows = q.table[si, gi]                       # (n_free, 4)
    if average_actions:
        cell_scores = score(classifier, q_rows).mean(axis=1)
    else:
        if policy is not None:
            best = np.argmax(policy.logits[si, gi], axis=1)
        else:
            best = np.argmax(q_rows, axis=1)
        cell_scores = score(classifier, q_rows[np.arange(len(free)), best])
    weights = sampling_weights(cell_scores)
    grid = np.full((maze.height, maze.width), np.nan)
    grid[free[:, 1], free[:, 0]] = weights
    return grid


# -- multi-seed comparison ----------------------------------------------------


@dataclass
class CompareResult:
    per_seed: list    # (label, seed, success_rate)
    aggregate: list   # (label, mean, stderr, n_seeds)


def _run_single(job):
    dataset, config, seed, pairs, max_steps = job
    cfg = dataclasses.replace(config, seed=seed)
    state = train(dataset, cfg)
    rate = success_rate(state.policy, dataset.maze, pairs, cfg.delta, max_steps)
    return (config.sampler, seed, rate)


def compare(dataset: OfflineDataset, configs, n_seeds: int = 10, seed_base: int = 0,
            n_pairs: int = 24, max_steps: int = 0,
            feasible_only: bool = True) -> CompareResult:
    """Train every config across seeds and report success on shared pairs.

    Evaluation pairs are stitching pairs drawn once (seeded by seed_base) and
    shared by all runs; with ``feasible_only`` the pairs are filtered to those
    the reachability oracle certifies. Seeds are seed_base + i. The
    ``RWS_THREADS`` environment variable (> 0) fans runs out over processes.
    """
    if len(configs) < 2:
        raise ValueError("compare needs at least two configs")
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be >= 1, got {n_seeds}")
    max_steps = max_steps or 4 * (dataset.maze.width + dataset.maze.height)
    pair_rng = np.random.default_rng((seed_base, 0x5EED))
    pairs = make_eval_pairs(dataset, "stitching", n_pairs, pair_rng)
    if feasible_only:
        mask = feasible_mask(dataset.maze, dataset, pairs)
        kept = [p for p, ok in zip(pairs, mask) if ok]
        if kept:
            pairs = kept

    jobs = [(dataset, config, seed_base + i, pairs, max_steps)
            for config in configs for i in range(n_seeds)]
    workers = int(os.environ.get("RWS_THREADS", "0") or 0)
    if workers > 0:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(_run_single, jobs))
    else:
        per_seed = [_run_single(job) for job in jobs]

    aggregate = []
    for k, config in enumerate(configs):
        rates = np.array([r for _, _, r in per_seed[k * n_seeds:(k + 1) * n_seeds]])
        stderr = float(rates.std(ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0
        aggregate.append((config.sampler, float(rates.mean()), stderr, n_seeds))
    return CompareResult(per_seed=per_seed, aggregate=aggregate)
