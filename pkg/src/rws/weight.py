"""Exponential sampling weights over classifier scores.

Weights are w_i = exp(c_i) / mean_k(exp(c_k)). The denominator is a shared
batch-level Monte Carlo estimate, which keeps the batch mean exactly 1 and,
because scores live in (0, 1), confines every weight to (1/e, e). A
per-sample denominator (extra goal draws per entry) is available for
fidelity studies via ``per_sample_denominator_m``.
"""

from __future__ import annotations

import numpy as np

from .maze import cell_indices
from .reach import ReachabilityClassifier, score
from .relabel import WeightedBatch
from .value import GoalConditionedQ


def sampling_weights(scores) -> np.ndarray:
    """Normalize exp(score) by its batch mean; constant scores give all-ones."""
    c = np.asarray(scores, dtype=np.float64).reshape(-1)
    if c.size == 0:
        raise ValueError("cannot weight an empty score list")
    if not np.all(np.isfinite(c)) or np.any(c < 0) or np.any(c > 1):
        raise ValueError("scores must be finite and within [0, 1]")
    e = np.exp(c)
    return e / e.mean()


def attach_weights(batch: WeightedBatch, q: GoalConditionedQ,
                   classifier: ReachabilityClassifier, *,
                   per_sample_denominator_m: int = 0, dataset=None,
                   rng=None) -> WeightedBatch:
    """Replace the batch weights with normalized reachability weights.

    Scores come from the classifier applied to Q(s, g, a) per entry. With
    ``per_sample_denominator_m`` = m > 0, each entry gets its own denominator
    estimated from m fresh uniform goal draws (requires dataset and rng).
    """
    si = cell_indices(q.width, batch.s)
    gi = cell_indices(q.width, batch.g)
    entry_scores = score(classifier, q.table[si, gi, batch.a])
    entry_scores = np.atleast_1d(entry_scores)
    if per_sample_denominator_m > 0:
        if dataset is None or rng is None:
            raise ValueError("per-sample denominators need a dataset and an rng")
        m = per_sample_denominator_m
        draw = rng.integers(0, dataset.states_xy.shape[0], size=(len(batch), m))
        goals = dataset.states_xy[draw]                     # (n, m, 2)
        g2 = cell_indices(q.width, goals)
        qv = q.table[si[:, None], g2, batch.a[:, None]]     # (n, m)
        denom = np.exp(score(classifier, qv)).mean(axis=1)
        weights = np.exp(entry_scores) / denom
    else:
        weights = sampling_weights(entry_scores)
    return batch.with_weights(weights)
