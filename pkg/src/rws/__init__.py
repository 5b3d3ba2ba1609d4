"""Reachability-weighted sampling for offline goal-conditioned RL on mazes."""

from .maze import (
    Action,
    Goal,
    InvalidStateError,
    Maze,
    MazeError,
    State,
    bfs_distances,
    is_terminal,
    phi,
    reward,
    step,
)
from .dataset import (
    OfflineDataset,
    Trajectory,
    build_mixture,
    generate_expert,
    generate_random,
    load,
    sample_goals_uniform,
    sample_transitions,
    save,
)
from .relabel import LabeledBatch, WeightedBatch, annotate_rewards, her_positive_batch, unlabeled_batch
from .value import GoalConditionedQ, PolicyTable, policy_action, policy_update, q_eval, td_update
from .reach import ReachabilityClassifier, classifier_update, pu_loss, score
from .weight import attach_weights, sampling_weights
from .trainer import RunState, TrainerConfig, load_checkpoint, save_checkpoint, train, train_step
from .evaluate import compare, reachability_oracle, rollout, success_rate, weight_heatmap

__all__ = [name for name in dir() if not name.startswith("_")]
