"""
Continuous Chain
One-dimensional corridor used with the delayed and sparse reward wrappers.
"""

from typing import Literal, Optional

import numpy as np

from utils.errors import InputValidationError
from .base_env import BaseEnv, StepResult


class ChainEnv(BaseEnv):
    """
    Position in [0, length] starting at 0; action a ∈ [−1, 1] moves by a·step_size.

    reward_mode "progress" pays the signed distance moved, "constant" pays 1
    every step. Reaching the far end terminates when terminal_at_end is set.
    """

    name = "chain"

    def __init__(
        self,
        length: float = 20.0,
        step_size: float = 1.0,
        horizon: int = 100,
        reward_mode: Literal["progress", "constant"] = "progress",
        terminal_at_end: bool = False,
    ):
        if length <= 0 or step_size <= 0:
            raise InputValidationError("length and step_size must be positive")
        if reward_mode not in ("progress", "constant"):
            raise InputValidationError(f"unknown reward_mode {reward_mode!r}")
        super().__init__(state_dim=1, action_dim=1, horizon=horizon)
        self.length = float(length)
        self.step_size = float(step_size)
        self.reward_mode = reward_mode
        self.terminal_at_end = terminal_at_end
        self.position = 0.0

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        self.position = 0.0
        self.elapsed = 0
        return np.array([self.position])

    def step(self, action: np.ndarray) -> StepResult:
        a = float(np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[0], -1.0, 1.0))
        previous = self.position
        self.position = float(np.clip(previous + a * self.step_size, 0.0, self.length))
        reward = self.position - previous if self.reward_mode == "progress" else 1.0
        terminated = self.terminal_at_end and self.position >= self.length
        truncated = self._tick() and not terminated
        return StepResult(
            observation=np.array([self.position]),
            reward=reward,
            terminated=terminated,
            truncated=truncated,
        )


def past_threshold(threshold: float):
    """Predicate (s, a, s') → s'[0] >= threshold."""

    def predicate(state, action, next_state) -> bool:
        return bool(float(next_state[0]) >= threshold)

    return predicate
