"""
Base Environment
Interface shared by the episodic environments and their reward wrappers.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict


class StepResult(BaseModel):
    """Outcome of one environment step; truncation is not a terminal for bootstrapping."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    observation: np.ndarray
    reward: float
    terminated: bool = False
    truncated: bool = False
    info: Dict[str, Any] = {}

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class BaseEnv(ABC):
    """Abstract base class for single-owner episodic environments."""

    name: str = "env"

    def __init__(self, state_dim: int, action_dim: int, horizon: int):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.horizon = horizon
        self.elapsed = 0

    @abstractmethod
    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        """
        Start a new episode.

        Args:
            seed: Optional seed for environments with random initial states

        Returns:
            First observation
        """
        pass

    @abstractmethod
    def step(self, action: np.ndarray) -> StepResult:
        """
        Advance one step.

        Args:
            action: Action vector of length action_dim

        Returns:
            StepResult
        """
        pass

    def _tick(self) -> bool:
        self.elapsed += 1
        return self.elapsed >= self.horizon

    def __str__(self) -> str:
        return f"{self.name} (state_dim: {self.state_dim}, action_dim: {self.action_dim}, horizon: {self.horizon})"


class EnvWrapper(BaseEnv):
    """Base class for wrappers that rewrite the reward stream of an inner environment."""

    def __init__(self, env: BaseEnv):
        super().__init__(env.state_dim, env.action_dim, env.horizon)
        self.env = env
        self.name = f"{type(self).__name__}({env.name})"

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        return self.env.reset(seed)

    def step(self, action: np.ndarray) -> StepResult:
        return self.env.step(action)

    def __getattr__(self, item: str):
        # only reached for attributes missing on the wrapper itself
        env = self.__dict__.get("env")
        if env is None:
            raise AttributeError(item)
        return getattr(env, item)
