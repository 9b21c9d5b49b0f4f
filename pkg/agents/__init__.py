from .base_agent import BaseLearner, GradientStep, LearnerState, StepMetrics
from .dac_agent import DacAgent, DacNetworks, build_networks
from .replay_buffer import ReplayBuffer, Transition, TransitionBatch, empirical_action_distribution
from .sac_agent import SacAgent
from .training import evaluate, run_training

__all__ = [
    "BaseLearner",
    "GradientStep",
    "LearnerState",
    "StepMetrics",
    "DacAgent",
    "DacNetworks",
    "build_networks",
    "ReplayBuffer",
    "Transition",
    "TransitionBatch",
    "empirical_action_distribution",
    "SacAgent",
    "evaluate",
    "run_training",
]
