"""Alternating training loop: classifier step, reward annotation, weight
attachment, weighted TD and policy steps.

One iteration consumes a single transition batch end to end, in this order:
sample transitions; build the hindsight-positive batch; build the unlabeled
batch from uniform goals; update the classifier on the Q-values of both
batches (the value table is never touched by that update); annotate rewards;
attach weights (all-ones unless the sampler is ``rws``); TD step; policy
step. Errors surface before any parameter mutation, so a failed step leaves
the run state untouched.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import OfflineDataset, sample_goals_uniform, sample_transitions
from .maze import Maze, cell_indices
from .reach import VARIANTS, ReachabilityClassifier, classifier_update, pu_loss, score
from .relabel import her_positive_batch, unlabeled_batch, annotate_rewards
from .value import GoalConditionedQ, PolicyTable, policy_update, td_update
from .weight import attach_weights

SAMPLERS = ("rws", "uniform", "her_ratio")
WEIGHT_MODES = ("multiplier", "resample")

CHECKPOINT_MAGIC = b"RWSQ1"
METRICS_HEADER = "iter,pu_loss,mean_w,max_w,td_err,success_rate"


class ConfigError(ValueError):
    """Bad training configuration (unknown key, wrong type, out-of-range value)."""


class CheckpointError(ValueError):
    """Unreadable or mismatched checkpoint file."""


@dataclass
class TrainerConfig:
    """All run hyperparameters; every field is settable from a config file.

    sampler:
        rws        classifier-derived weights on the relabeled batch
        uniform    same pipeline with weights forced to 1
        her_ratio  unweighted baseline mixing hindsight goals into the
                   relabeled batch with probability her_mix_ratio
    weight_mode:
        multiplier weights scale each sample's update
        resample   the batch is re-drawn proportionally to the weights
    weight_critic: when false, only the policy loss sees the weights.
    classifier_warmup_iters: delay classifier updates this many iterations
        (0 = concurrent alternation from the start).
    eval_every: 0 disables in-loop rollout evaluation; otherwise the
        success_rate metric column is refreshed every that many iterations.
    """

    gamma: float = 0.95
    delta: float = 0.5
    eta_p: float = 0.5
    batch_size: int = 256
    lr_q: float = 0.5
    lr_pi: float = 0.1
    lr_c: float = 0.05
    alpha: float = 1.0
    iterations: int = 2000
    seed: int = 0
    pu_variant: str = "standard_nnpu"
    weight_mode: str = "multiplier"
    weight_critic: bool = True
    sampler: str = "rws"
    her_mix_ratio: float = 0.5
    classifier_warmup_iters: int = 0
    classifier_updates_per_step: int = 1
    per_sample_denominator_m: int = 0
    eval_every: int = 0
    eval_pairs: int = 32
    eval_max_steps: int = 0  # 0 = 4 * (width + height)

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.delta < 0.0:
            raise ConfigError(f"delta must be >= 0, got {self.delta}")
        if not 0.0 < self.eta_p < 1.0:
            raise ConfigError(f"eta_p must be in (0, 1), got {self.eta_p}")
        for name in ("batch_size", "classifier_updates_per_step"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("lr_q", "lr_pi", "lr_c", "alpha"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("iterations", "classifier_warmup_iters", "per_sample_denominator_m",
                     "eval_every", "eval_pairs", "eval_max_steps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 <= self.her_mix_ratio <= 1.0:
            raise ConfigError(f"her_mix_ratio must be in [0, 1], got {self.her_mix_ratio}")
        if self.pu_variant not in VARIANTS:
            raise ConfigError(f"pu_variant must be one of {VARIANTS}, got {self.pu_variant!r}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"weight_mode must be one of {WEIGHT_MODES}, got {self.weight_mode!r}")
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")

    def to_text(self) -> str:
        """key=value echo, readable back by parse_config."""
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> TrainerConfig:
    """Parse the key=value config format; unknown keys are errors."""
    fields = {f.name: f for f in dataclasses.fields(TrainerConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in fields:
            raise ConfigError(f"unknown config key: {key}")
        ftype = fields[key].type
        try:
            if ftype == "bool":
                if val.lower() not in ("true", "false", "0", "1"):
                    raise ValueError(val)
                values[key] = val.lower() in ("true", "1")
            elif ftype == "int":
                values[key] = int(val)
            elif ftype == "float":
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {val!r} for {key}") from None
    config = TrainerConfig(**values)
    config.validate()
    return config


def load_config(path) -> TrainerConfig:
    with open(path, "r", encoding="ascii") as f:
        return parse_config(f.read())


@dataclass
class MetricsRow:
    iteration: int
    pu_loss: float
    mean_weight: float
    max_weight: float
    td_error: float
    success_rate: float = math.nan

    def as_csv(self) -> str:
        return ",".join([str(self.iteration), repr(self.pu_loss), repr(self.mean_weight),
                         repr(self.max_weight), repr(self.td_error),
                         repr(self.success_rate)])


@dataclass
class RunState:
    q: GoalConditionedQ
    policy: PolicyTable
    classifier: ReachabilityClassifier
    iteration: int = 0
    metrics: list = field(default_factory=list)


def init_run_state(dataset: OfflineDataset, config: TrainerConfig) -> RunState:
    maze = dataset.maze
    return RunState(
        q=GoalConditionedQ.pessimistic(maze, config.gamma),
        policy=PolicyTable.uniform(maze),
        classifier=ReachabilityClassifier(eta_p=config.eta_p, variant=config.pu_variant),
    )


def train_step(state: RunState, dataset: OfflineDataset, config: TrainerConfig,
               rng) -> RunState:
    """One alternation of Algorithm-style training; appends one metrics row."""
    n = config.batch_size
    trans = sample_transitions(dataset, n, rng)
    positives = her_positive_batch(dataset, trans, rng)
    goals = sample_goals_uniform(dataset, n, rng)
    unlabeled = unlabeled_batch(trans, goals)

    # Q-values enter the classifier step as plain number arrays, so the value
    # table stays frozen through it by construction.
    q_table = state.q.table
    q_pos = q_table[cell_indices(state.q.width, positives.s),
                    cell_indices(state.q.width, positives.g), positives.a]
    q_unl = q_table[cell_indices(state.q.width, unlabeled.s),
                    cell_indices(state.q.width, unlabeled.g), unlabeled.a]
    if state.iteration >= config.classifier_warmup_iters:
        for _ in range(config.classifier_updates_per_step):
            loss = classifier_update(state.classifier, q_pos, q_unl, config.lr_c)
    else:
        loss = pu_loss(score(state.classifier, q_pos), score(state.classifier, q_unl),
                       state.classifier.eta_p, state.classifier.variant)

    if config.sampler == "her_ratio":
        use_her = rng.random(n) < config.her_mix_ratio
        mixed = np.where(use_her[:, None], positives.g, unlabeled.g)
        rl_batch = unlabeled_batch(trans, mixed)
    else:
        rl_batch = unlabeled
    batch = annotate_rewards(rl_batch, trans, config.delta)

    if config.sampler == "rws":
        batch = attach_weights(batch, state.q, state.classifier,
                               per_sample_denominator_m=config.per_sample_denominator_m,
                               dataset=dataset, rng=rng)
        if config.weight_mode == "resample":
            p = batch.weights / batch.weights.sum()
            idx = rng.choice(n, size=n, p=p)
            batch = dataclasses.replace(
                batch, s=batch.s[idx], a=batch.a[idx], g=batch.g[idx], r=batch.r[idx],
                s2=batch.s2[idx], done=batch.done[idx], weights=np.ones(n))
    mean_w = float(batch.weights.mean())
    max_w = float(batch.weights.max())

    td_batch = batch if config.weight_critic else batch.with_weights(np.ones(len(batch)))
    td_err = td_update(state.q, td_batch, config.lr_q)
    policy_update(state.policy, state.q, batch, config.alpha, config.lr_pi)

    state.iteration += 1
    state.metrics.append(MetricsRow(
        iteration=state.iteration, pu_loss=float(loss), mean_weight=mean_w,
        max_weight=max_w, td_error=float(np.abs(td_err).mean())))
    return state


def train(dataset: OfflineDataset, config: TrainerConfig, out_dir=None) -> RunState:
    """Run the configured number of iterations; optionally write artifacts.

    With ``out_dir`` set, emits ``checkpoint.rwsq`` and ``metrics.csv``.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    state = init_run_state(dataset, config)

    eval_pairs = None
    if config.eval_every > 0:
        from .evaluate import make_eval_pairs  # deferred: evaluate imports trainer
        pair_rng = np.random.default_rng((config.seed, 0x5EED))
        eval_pairs = make_eval_pairs(dataset, "stitching", config.eval_pairs, pair_rng)

    max_steps = config.eval_max_steps or 4 * (dataset.maze.width + dataset.maze.height)
    last_success = math.nan
    for i in range(config.iterations):
        train_step(state, dataset, config, rng)
        if eval_pairs is not None and (i + 1) % config.eval_every == 0:
            from .evaluate import success_rate
            last_success = success_rate(state.policy, dataset.maze, eval_pairs,
                                        config.delta, max_steps)
        state.metrics[-1].success_rate = last_success

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_checkpoint(os.path.join(out_dir, "checkpoint.rwsq"), state,
                        dataset.maze, config.delta)
        with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="ascii") as f:
            f.write(metrics_csv(state.metrics))
    return state


def metrics_csv(rows) -> str:
    return METRICS_HEADER + "\n" + "".join(row.as_csv() + "\n" for row in rows)


# -- checkpointing -----------------------------------------------------------


@dataclass
class Checkpoint:
    q: GoalConditionedQ
    policy: PolicyTable
    classifier: ReachabilityClassifier
    maze_hash: str
    width: int
    height: int
    delta: float
    iteration: int


def save_checkpoint(path, state: RunState, maze: Maze, delta: float) -> None:
    """Versioned binary dump: text header lines, then the two tables."""
    c = state.classifier
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC + b"\n")
        f.write(f"gamma {state.q.gamma!r}\n".encode("ascii"))
        f.write(f"delta {delta!r}\n".encode("ascii"))
        f.write(f"iteration {state.iteration}\n".encode("ascii"))
        f.write(f"maze {maze.text_hash()} {maze.width} {maze.height}\n".encode("ascii"))
        f.write(f"classifier {c.slope!r} {c.intercept!r} {c.eta_p!r} {c.variant}\n".encode("ascii"))
        np.save(f, state.q.table)
        np.save(f, state.policy.logits)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"bad checkpoint magic {magic!r}")

        def expect(key):
            parts = f.readline().decode("ascii").split()
            if not parts or parts[0] != key:
                raise CheckpointError(f"expected checkpoint field {key!r}")
            return parts[1:]

        gamma = float(expect("gamma")[0])
        delta = float(expect("delta")[0])
        iteration = int(expect("iteration")[0])
        maze_hash, width, height = expect("maze")
        slope, intercept, eta_p, variant = expect("classifier")
        try:
            q_table = np.load(f)
            logits = np.load(f)
        except ValueError as e:
            raise CheckpointError(f"corrupt checkpoint arrays: {e}") from None
    width, height = int(width), int(height)
    n = width * height
    if q_table.shape != (n, n, 4) or logits.shape != (n, n, 4):
        raise CheckpointError(f"table shapes {q_table.shape}/{logits.shape} do not match "
                              f"{width}x{height} maze")
    return Checkpoint(
        q=GoalConditionedQ(width=width, height=height, gamma=gamma, table=q_table),
        policy=PolicyTable(width=width, height=height, logits=logits),
        classifier=ReachabilityClassifier(slope=float(slope), intercept=float(intercept),
                                          eta_p=float(eta_p), variant=variant),
        maze_hash=maze_hash, width=width, height=height, delta=delta, iteration=iteration)
