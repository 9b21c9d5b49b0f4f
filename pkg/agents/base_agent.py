"""
Base Learner
Defines the core functionality and interface that all off-policy learners
must implement.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch
import torch.nn as nn
from pydantic import BaseModel

from config.config import DacHyper
from networks.core import DTYPE, GaussianPolicyHead, load_arrays, load_module_arrays, module_arrays, save_arrays
from utils.errors import NonFiniteGradientError
from .replay_buffer import ReplayBuffer

logger = logging.getLogger("dac.agent")


class LearnerState(BaseModel):
    """Bookkeeping of a learner between updates."""
    updates: int = 0
    last_metrics: Dict[str, float] = {}
    checkpoints: List[str] = []


class StepMetrics(BaseModel):
    """Diagnostics returned by one gradient step."""
    loss_q1: float
    loss_q2: float
    loss_v: float
    obj_pi: float
    obj_ratio: float
    mean_alpha: float
    mean_entropy: float
    mean_js_div: float
    mean_ratio: float
    clip_min: float
    clip_max: float
    loss_alpha: Optional[float] = None


@dataclass
class GradientStep:
    """Value of an objective or loss together with its parameter gradients."""
    value: float
    grads: List[torch.Tensor]
    extras: Dict[str, Any] = field(default_factory=dict)


class BaseLearner(ABC):
    """Abstract base class for the actor-critic learners."""

    def __init__(self, state_dim: int, action_dim: int, hyper: DacHyper, seed: int = 0):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.hyper = hyper
        self.seed = seed
        self.state = LearnerState()
        self.policy: GaussianPolicyHead

    @abstractmethod
    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator) -> StepMetrics:
        """
        Perform one gradient step on a minibatch drawn from the buffer.

        Args:
            buffer: Replay buffer (nonempty)
            rng: Random generator used for minibatch and noise draws

        Returns:
            StepMetrics of the step
        """
        pass

    @abstractmethod
    def modules(self) -> Dict[str, nn.Module]:
        """Named modules whose parameters make up the learner's checkpoint."""
        pass

    def act(self, observation: np.ndarray, rng: np.random.Generator, deterministic: bool = False) -> np.ndarray:
        """
        Choose an action for one observation.

        Args:
            observation: Environment observation
            rng: Source of the Gaussian noise for stochastic actions
            deterministic: Use the squashed mean action

        Returns:
            Action vector
        """
        obs = torch.as_tensor(np.asarray(observation, dtype=np.float64), dtype=DTYPE).reshape(1, -1)
        with torch.no_grad():
            if deterministic:
                action = self.policy.deterministic(obs)
            else:
                noise = torch.as_tensor(rng.standard_normal((1, self.action_dim)), dtype=DTYPE)
                action, _, _ = self.policy.sample(obs, noise)
        return action.reshape(-1).numpy().copy()

    def _apply(self, optimizer: torch.optim.Optimizer, params: List[nn.Parameter], grads: List[torch.Tensor], ascent: bool) -> None:
        for param, g in zip(params, grads):
            param.grad = (-g if ascent else g).detach().clone()
        optimizer.step()
        optimizer.zero_grad(set_to_none=True)

    def _check_finite(self, label: str, value: torch.Tensor, grads: List[torch.Tensor]) -> None:
        if not torch.isfinite(value).all() or any(not torch.isfinite(g).all() for g in grads):
            raise NonFiniteGradientError(label, self.state.updates)

    def parameter_arrays(self) -> Dict[str, np.ndarray]:
        return module_arrays(self.modules())

    def save_checkpoint(self, path: Union[str, Path]) -> None:
        """Write every module parameter to the checkpoint container at path."""
        save_arrays(path, module_arrays(self.modules()))
        self.state.checkpoints.append(str(path))
        logger.info(f"Saved checkpoint after {self.state.updates} updates to {path}")

    def load_checkpoint(self, path: Union[str, Path]) -> None:
        """Load parameters written by save_checkpoint."""
        load_module_arrays(self.modules(), load_arrays(path))

    def __str__(self) -> str:
        return f"{type(self).__name__} (updates: {self.state.updates}, seed: {self.seed})"
