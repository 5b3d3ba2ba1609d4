"""Tabular goal-conditioned Q-function and softmax policy.

Q(s, g, a) lives in [-1/(1-gamma), 0]: with a -1 step reward and termination
on arrival, the optimal value at BFS distance k is -(1-gamma^k)/(1-gamma),
so -1/(1-gamma) is the exact value of an unreachable goal and doubles as a
pessimistic initializer for unseen entries.

Updates are batch-synchronous: targets and gradients are computed from the
tables as they were at the start of the call, then scatter-added.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maze import Action, Goal, Maze, State, cell_indices
from .relabel import WeightedBatch


@dataclass
class GoalConditionedQ:
    width: int
    height: int
    gamma: float
    table: np.ndarray  # (n_cells, n_cells, 4)

    @classmethod
    def pessimistic(cls, maze: Maze, gamma: float) -> "GoalConditionedQ":
        """Fresh table at the lower bound -1/(1-gamma)."""
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {gamma}")
        n = maze.n_cells
        table = np.full((n, n, 4), -1.0 / (1.0 - gamma), dtype=np.float64)
        return cls(width=maze.width, height=maze.height, gamma=gamma, table=table)

    @property
    def min_value(self) -> float:
        return -1.0 / (1.0 - self.gamma)


@dataclass
class PolicyTable:
    width: int
    height: int
    logits: np.ndarray  # (n_cells, n_cells, 4)

    @classmethod
    def uniform(cls, maze: Maze) -> "PolicyTable":
        n = maze.n_cells
        return cls(width=maze.width, height=maze.height,
                   logits=np.zeros((n, n, 4), dtype=np.float64))


def _check_cell(width: int, height: int, c, what: str) -> int:
    x, y = int(c[0]), int(c[1])
    if not (0 <= x < width and 0 <= y < height):
        raise IndexError(f"{what} {(x, y)} outside {width}x{height} grid")
    return y * width + x


def q_eval(q: GoalConditionedQ, s: State, g: Goal, a: Action) -> float:
    si = _check_cell(q.width, q.height, s, "state")
    gi = _check_cell(q.width, q.height, g, "goal")
    if not 0 <= int(a) < 4:
        raise IndexError(f"action index {int(a)} out of range")
    return float(q.table[si, gi, int(a)])


def td_update(q: GoalConditionedQ, batch: WeightedBatch, lr: float) -> np.ndarray:
    """Weighted Q-learning backup toward r + gamma * (1-done) * max_a' Q(s', g, a').

    Mutates the table in place (clamped to [-1/(1-gamma), 0]) and returns the
    per-entry TD errors measured before the update.
    """
    si = cell_indices(q.width, batch.s)
    gi = cell_indices(q.width, batch.g)
    s2i = cell_indices(q.width, batch.s2)
    a = batch.a
    next_best = q.table[s2i, gi].max(axis=1)
    target = batch.r + q.gamma * np.where(batch.done, 0.0, next_best)
    err = target - q.table[si, gi, a]
    np.add.at(q.table, (si, gi, a), lr * batch.weights * err)
    q.table[si, gi, a] = np.clip(q.table[si, gi, a], q.min_value, 0.0)
    return err


def _softmax(rows: np.ndarray) -> np.ndarray:
    shifted = rows - rows.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def policy_loss(policy: PolicyTable, q: GoalConditionedQ, batch: WeightedBatch,
                alpha: float) -> float:
    """Sum of per-sample losses w * (-E_pi[Q] + alpha * CE(pi, data action))."""
    si = cell_indices(policy.width, batch.s)
    gi = cell_indices(policy.width, batch.g)
    rows = policy.logits[si, gi]
    shifted = rows - rows.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1))
    logp = shifted - logz[:, None]
    p = np.exp(logp)
    qrows = q.table[si, gi]
    expected_q = (p * qrows).sum(axis=1)
    nll = -logp[np.arange(len(batch)), batch.a]
    return float(np.sum(batch.weights * (-expected_q + alpha * nll)))


def policy_grad(policy: PolicyTable, q: GoalConditionedQ, batch: WeightedBatch,
                alpha: float) -> np.ndarray:
    """Dense analytic gradient of policy_loss w.r.t. the logits table."""
    si = cell_indices(policy.width, batch.s)
    gi = cell_indices(policy.width, batch.g)
    p = _softmax(policy.logits[si, gi])
    qrows = q.table[si, gi]
    expected_q = (p * qrows).sum(axis=1, keepdims=True)
    grad_rows = -p * (qrows - expected_q)
    ce_rows = p.copy()
    ce_rows[np.arange(len(batch)), batch.a] -= 1.0
    grad_rows = batch.weights[:, None] * (grad_rows + alpha * ce_rows)
    dense = np.zeros_like(policy.logits)
    np.add.at(dense, (si, gi), grad_rows)
    return dense


def policy_update(policy: PolicyTable, q: GoalConditionedQ, batch: WeightedBatch,
                  alpha: float, lr: float) -> None:
    """One gradient-descent step on policy_loss; Q-values are treated as constants."""
    si = cell_indices(policy.width, batch.s)
    gi = cell_indices(policy.width, batch.g)
    p = _softmax(policy.logits[si, gi])
    qrows = q.table[si, gi]
    expected_q = (p * qrows).sum(axis=1, keepdims=True)
    grad_rows = -p * (qrows - expected_q)
    ce_rows = p.copy()
    ce_rows[np.arange(len(batch)), batch.a] -= 1.0
    grad_rows = batch.weights[:, None] * (grad_rows + alpha * ce_rows)
    np.add.at(policy.logits, (si, gi), -lr * grad_rows)


def policy_action(policy: PolicyTable, s: State, g: Goal) -> Action:
    """Greedy action; ties resolve to the lowest action index."""
    si = _check_cell(policy.width, policy.height, s, "state")
    gi = _check_cell(policy.width, policy.height, g, "goal")
    return Action(int(np.argmax(policy.logits[si, gi])))
