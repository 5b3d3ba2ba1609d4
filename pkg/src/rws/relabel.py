"""Goal relabeling: hindsight positives, uniform-goal unlabeled batches,
and reward-annotated training batches.

Batches hold parallel numpy arrays (coordinates, not cell indices) and can
be iterated as typed entry tuples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .dataset import OfflineDataset, TransitionBatch
from .maze import Action, Goal, State

log = logging.getLogger(__name__)

POSITIVE, UNLABELED = "positive", "unlabeled"


@dataclass
class LabeledBatch:
    """(s, g, a) triples sharing one label: known-reachable or unlabeled."""

    label: str
    s: np.ndarray  # (n, 2)
    g: np.ndarray  # (n, 2)
    a: np.ndarray  # (n,)

    def __post_init__(self):
        if self.label not in (POSITIVE, UNLABELED):
            raise ValueError(f"unknown batch label {self.label!r}")
        self.s = np.asarray(self.s, dtype=np.int64).reshape(-1, 2)
        self.g = np.asarray(self.g, dtype=np.int64).reshape(-1, 2)
        self.a = np.asarray(self.a, dtype=np.int64).reshape(-1)
        if len(self) == 0:
            raise ValueError("labeled batch may not be empty")
        if not (self.s.shape[0] == self.g.shape[0] == self.a.shape[0]):
            raise ValueError("misaligned batch arrays")

    def __len__(self) -> int:
        return int(self.a.shape[0])

    def entries(self) -> Iterator:
        for i in range(len(self)):
            yield (State(int(self.s[i, 0]), int(self.s[i, 1])),
                   Goal(int(self.g[i, 0]), int(self.g[i, 1])),
                   Action(int(self.a[i])))

    @classmethod
    def from_entries(cls, label: str, entries) -> "LabeledBatch":
        s = [(e[0][0], e[0][1]) for e in entries]
        g = [(e[1][0], e[1][1]) for e in entries]
        a = [int(e[2]) for e in entries]
        return cls(label=label, s=np.asarray(s), g=np.asarray(g), a=np.asarray(a))


@dataclass
class WeightedBatch:
    """Relabeled transitions with rewards, termination flags and sampling weights."""

    s: np.ndarray        # (n, 2)
    a: np.ndarray        # (n,)
    g: np.ndarray        # (n, 2)
    r: np.ndarray        # (n,) in {0, -1}
    s2: np.ndarray       # (n, 2)
    done: np.ndarray     # (n,) bool
    weights: np.ndarray  # (n,) positive

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if len(self) == 0:
            raise ValueError("weighted batch may not be empty")
        if self.weights.shape[0] != self.a.shape[0]:
            raise ValueError("weights misaligned with entries")
        if not np.all(self.weights > 0):
            raise ValueError("weights must all be positive")

    def __len__(self) -> int:
        return int(self.a.shape[0])

    def entries(self) -> Iterator:
        for i in range(len(self)):
            yield (State(int(self.s[i, 0]), int(self.s[i, 1])),
                   Action(int(self.a[i])),
                   Goal(int(self.g[i, 0]), int(self.g[i, 1])),
                   float(self.r[i]),
                   State(int(self.s2[i, 0]), int(self.s2[i, 1])),
                   bool(self.done[i]))

    def with_weights(self, weights) -> "WeightedBatch":
        return replace(self, weights=np.asarray(weights, dtype=np.float64))


def her_positive_batch(dataset: OfflineDataset, transitions: TransitionBatch,
                       rng) -> LabeledBatch:
    """Hindsight relabeling: each transition gets a goal visited later on its
    own trajectory, with the future index h drawn uniformly from {i+1, ..., L}.

    Entries are reachable by construction (h steps ahead on the same path).
    Transitions from zero-length trajectories cannot be indexed, but are
    skipped defensively with a warning if they ever appear.
    """
    lengths = dataset.traj_len[transitions.traj_id]
    valid = lengths > transitions.step
    n_skipped = int(np.sum(~valid))
    if n_skipped:
        log.warning("her_positive_batch: skipped %d degenerate transitions", n_skipped)
        if not np.any(valid):
            raise ValueError("no usable transitions for hindsight relabeling")
    step_i = transitions.step[valid]
    traj = transitions.traj_id[valid]
    h = rng.integers(step_i + 1, lengths[valid] + 1)
    goals = dataset.states_xy[dataset.state_off[traj] + h]
    return LabeledBatch(label=POSITIVE, s=transitions.s[valid], g=goals,
                        a=transitions.a[valid])


def unlabeled_batch(transitions: TransitionBatch, goals) -> LabeledBatch:
    """Pair transitions with independently sampled goals, in order."""
    goals = np.asarray(goals, dtype=np.int64).reshape(-1, 2)
    if goals.shape[0] != len(transitions):
        raise ValueError(
            f"{len(transitions)} transitions but {goals.shape[0]} goals")
    return LabeledBatch(label=UNLABELED, s=transitions.s, g=goals, a=transitions.a)


def annotate_rewards(batch: LabeledBatch, transitions: TransitionBatch,
                     delta: float) -> WeightedBatch:
    """Attach next states, sparse rewards and termination flags; weights start at 1.

    The reward is computed on the post-action state s', so r = 0 coincides
    with episode termination.
    """
    if batch.label != UNLABELED:
        raise ValueError("reward annotation expects the unlabeled (training) batch")
    if len(batch) != len(transitions):
        raise ValueError(f"{len(batch)} entries but {len(transitions)} transitions")
    diff = transitions.s2 - batch.g
    d2 = diff[:, 0] ** 2 + diff[:, 1] ** 2
    done = d2 < delta
    r = np.where(done, 0.0, -1.0)
    return WeightedBatch(s=batch.s, a=batch.a, g=batch.g, r=r, s2=transitions.s2,
                         done=done, weights=np.ones(len(batch)))
