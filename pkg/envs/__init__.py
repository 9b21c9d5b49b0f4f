from .base_env import BaseEnv, EnvWrapper, StepResult
from .chain import ChainEnv, past_threshold
from .maze import FourRoomMaze, in_upper_right_room, maze_step, wall_boxes
from .random_mdp import random_buffer_distribution, random_finite_mdp, random_policy
from .toy import OneStepToyEnv, one_step_toy, toy_buffer_rows
from .visitation import VisitationGrid, read_pgm, record_visit
from .wrappers import DelayedRewardWrapper, SparseThresholdWrapper, delayed_reward_wrapper, sparse_threshold_wrapper

__all__ = [
    "BaseEnv",
    "EnvWrapper",
    "StepResult",
    "ChainEnv",
    "past_threshold",
    "FourRoomMaze",
    "in_upper_right_room",
    "maze_step",
    "wall_boxes",
    "random_buffer_distribution",
    "random_finite_mdp",
    "random_policy",
    "OneStepToyEnv",
    "one_step_toy",
    "toy_buffer_rows",
    "VisitationGrid",
    "read_pgm",
    "record_visit",
    "DelayedRewardWrapper",
    "SparseThresholdWrapper",
    "delayed_reward_wrapper",
    "sparse_threshold_wrapper",
]
