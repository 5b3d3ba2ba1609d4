"""Command-line entry point: gen-data, train, eval, heatmap, compare.

Every command is deterministic given its flags; numeric output is written
as full-precision decimal text so reruns are byte-identical. On failure the
command removes any partially written outputs and exits nonzero.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import dataset as ds
from . import evaluate as ev
from .maze import Maze, State
from .trainer import load_config, save_checkpoint, load_checkpoint, train


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_gen_data(args, written: list) -> None:
    maze = Maze.from_file(args.maze)
    if args.n_traj < 1:
        raise ValueError("n-traj must be >= 1 (empty dataset rejected)")
    rng = np.random.default_rng(args.seed)
    data = ds.build_mixture(maze, args.expert_ratio, args.n_traj, rng,
                            random_length=args.random_length)
    written.append(args.out)
    ds.save(data, args.out)
    n_expert = sum(t.source == ds.EXPERT for t in data.trajectories)
    visited = {(int(x), int(y)) for x, y in data.states_xy}
    n_free = sum(1 for _ in maze.free_cells())
    print(f"trajectories: {len(data.trajectories)} "
          f"({n_expert} expert, {len(data.trajectories) - n_expert} random)")
    print(f"transitions: {data.n_transitions}")
    print(f"state coverage: {len(visited)}/{n_free} free cells "
          f"({_fmt(len(visited) / n_free)})")


def cmd_train(args, written: list) -> None:
    config = load_config(args.config)
    data = ds.load(args.dataset)
    os.makedirs(args.out_dir, exist_ok=True)
    written.extend(os.path.join(args.out_dir, name)
                   for name in ("checkpoint.rwsq", "metrics.csv", "config.txt"))
    state = train(data, config, out_dir=args.out_dir)
    with open(os.path.join(args.out_dir, "config.txt"), "w", encoding="ascii") as f:
        f.write(config.to_text())
    print(f"trained {state.iteration} iterations -> {args.out_dir}")


def cmd_eval(args, written: list) -> None:
    ckpt = load_checkpoint(args.checkpoint)
    data = ds.load(args.dataset)
    if data.maze.text_hash() != ckpt.maze_hash:
        raise ValueError(f"checkpoint maze {ckpt.maze_hash} does not match dataset maze "
                         f"{data.maze.text_hash()}")
    rng = np.random.default_rng(args.seed)
    pairs = ev.make_eval_pairs(data, args.pairs_mode, args.episodes, rng)
    feasible = ev.feasible_mask(data.maze, data, pairs)
    max_steps = args.max_steps or 4 * (data.maze.width + data.maze.height)
    rows = ["start_x,start_y,goal_x,goal_y,feasible,success,steps"]
    hits, feasible_hits = 0, 0
    for (start, goal), ok in zip(pairs, feasible):
        success, steps = ev.rollout(ckpt.policy, data.maze, start, goal,
                                    ckpt.delta, max_steps)
        hits += success
        feasible_hits += success and ok
        rows.append(f"{start.x},{start.y},{goal.x},{goal.y},{int(ok)},{int(success)},{steps}")
    written.append(args.out)
    with open(args.out, "w", encoding="ascii") as f:
        f.write("\n".join(rows) + "\n")
    n_feasible = sum(feasible)
    print(f"success_rate: {_fmt(hits / len(pairs))} over {len(pairs)} pairs")
    if n_feasible:
        print(f"feasible success_rate: {_fmt(feasible_hits / n_feasible)} "
              f"over {n_feasible} oracle-feasible pairs")


def cmd_heatmap(args, written: list) -> None:
    ckpt = load_checkpoint(args.checkpoint)
    data = ds.load(args.dataset)
    if data.maze.text_hash() != ckpt.maze_hash:
        raise ValueError(f"checkpoint maze {ckpt.maze_hash} does not match dataset maze "
                         f"{data.maze.text_hash()}")
    state = State(args.state_x, args.state_y)
    grid = ev.weight_heatmap(state, ckpt.q, ckpt.classifier, data.maze,
                             policy=None if args.average_actions else ckpt.policy,
                             average_actions=args.average_actions)
    written.append(args.out)
    with open(args.out, "w", encoding="ascii") as f:
        for row in grid:
            f.write(" ".join("NaN" if math.isnan(v) else _fmt(v) for v in row) + "\n")
    pgm_path = os.path.splitext(args.out)[0] + ".pgm"
    written.append(pgm_path)
    _write_pgm(pgm_path, grid)
    print(f"heatmap {grid.shape[1]}x{grid.shape[0]} -> {args.out}, {pgm_path}")


def _write_pgm(path, grid) -> None:
    """Portable graymap: darker pixels mean higher weight; walls are white."""
    finite = grid[~np.isnan(grid)]
    top = float(finite.max()) if finite.size else 1.0
    lines = ["P2", f"{grid.shape[1]} {grid.shape[0]}", "255"]
    for row in grid:
        pixels = [255 if math.isnan(v) else int(round(255 * (1.0 - v / top)))
                  for v in row]
        lines.append(" ".join(str(p) for p in pixels))
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def cmd_compare(args, written: list) -> None:
    if len(args.config) < 2:
        raise ValueError("compare needs at least two --config files")
    configs = [load_config(path) for path in args.config]
    data = ds.load(args.dataset)
    result = ev.compare(data, configs, n_seeds=args.n_seeds, seed_base=args.seed_base,
                        n_pairs=args.n_pairs, max_steps=args.max_steps)
    per_seed_path = os.path.splitext(args.out)[0] + "_per_seed.csv"
    written.extend([per_seed_path, args.out])
    with open(per_seed_path, "w", encoding="ascii") as f:
        f.write("sampler,seed,success_rate\n")
        for label, seed, rate in result.per_seed:
            f.write(f"{label},{seed},{_fmt(rate)}\n")
    with open(args.out, "w", encoding="ascii") as f:
        f.write("sampler,mean,stderr,n_seeds\n")
        for label, mean, stderr, n in result.aggregate:
            f.write(f"{label},{_fmt(mean)},{_fmt(stderr)},{n}\n")
    for label, mean, stderr, n in result.aggregate:
        print(f"{label}: {_fmt(mean)} +- {_fmt(stderr)} ({n} seeds)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rws", description="Reachability-weighted sampling for offline "
                                "goal-conditioned RL on gridworld mazes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate an offline dataset")
    p.add_argument("--maze", required=True)
    p.add_argument("--expert-ratio", type=float, required=True)
    p.add_argument("--n-traj", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-length", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train from a config and dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="roll out a trained policy")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--pairs-mode", choices=ev.PAIR_MODES, default="stitching")
    p.add_argument("--episodes", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("heatmap", help="export the goal-weight heatmap for a state")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--state-x", type=int, required=True)
    p.add_argument("--state-y", type=int, required=True)
    p.add_argument("--average-actions", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("compare", help="multi-seed sampler comparison")
    p.add_argument("--config", action="append", required=True,
                   help="config file; pass at least twice")
    p.add_argument("--dataset", required=True)
    p.add_argument("--n-seeds", type=int, default=10)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--n-pairs", type=int, default=24)
    p.add_argument("--max-steps", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    written: list = []
    try:
        args.func(args, written)
    except Exception as e:  # noqa: BLE001 - uniform CLI failure contract
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
