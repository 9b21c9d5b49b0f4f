"""
Experiment nodes behind the command-line subcommands.
"""

from .base_node import BaseExperimentNode, NodeConfig, NodeState
from .maze_node import MazeExploreNode
from .tabular_node import TabularDpiNode, ToyNode
from .train_node import TrainNode, build_env
from .verify_node import VerifyNode

__all__ = [
    "BaseExperimentNode",
    "NodeConfig",
    "NodeState",
    "MazeExploreNode",
    "TabularDpiNode",
    "ToyNode",
    "TrainNode",
    "VerifyNode",
    "build_env",
]
