"""
Reward Wrappers
Delayed-reward and sparse threshold rewrites of an inner environment's
reward stream.
"""

from typing import Callable, Optional

import numpy as np

from utils.errors import InputValidationError
from .base_env import BaseEnv, EnvWrapper, StepResult

Predicate = Callable[[np.ndarray, np.ndarray, np.ndarray], bool]


class DelayedRewardWrapper(EnvWrapper):
    """
    Accumulates rewards and delivers the running sum once every D steps.

    The remainder is flushed on the last step of an episode, so the
    undiscounted episode return is unchanged.
    """

    def __init__(self, env: BaseEnv, delay: int):
        if delay < 1:
            raise InputValidationError(f"delay must be >= 1, got {delay}")
        super().__init__(env)
        self.delay = int(delay)
        self._pending = 0.0
        self._count = 0

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        self._pending = 0.0
        self._count = 0
        return self.env.reset(seed)

    def step(self, action: np.ndarray) -> StepResult:
        result = self.env.step(action)
        self._pending += result.reward
        self._count += 1
        if self._count % self.delay == 0 or result.done:
            reward, self._pending = self._pending, 0.0
        else:
            reward = 0.0
        info = dict(result.info, base_reward=result.reward)
        return result.model_copy(update={"reward": reward, "info": info})


class SparseThresholdWrapper(EnvWrapper):
    """Reward 1 when predicate(s, a, s') holds, otherwise 0."""

    def __init__(self, env: BaseEnv, predicate: Predicate):
        super().__init__(env)
        self.predicate = predicate
        self._last: Optional[np.ndarray] = None

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        self._last = self.env.reset(seed)
        return self._last

    def step(self, action: np.ndarray) -> StepResult:
        result = self.env.step(action)
        reward = 1.0 if self.predicate(self._last, np.asarray(action), result.observation) else 0.0
        self._last = result.observation
        info = dict(result.info, base_reward=result.reward)
        return result.model_copy(update={"reward": reward, "info": info})


def delayed_reward_wrapper(env: BaseEnv, delay: int) -> DelayedRewardWrapper:
    return DelayedRewardWrapper(env, delay)


def sparse_threshold_wrapper(env: BaseEnv, predicate: Predicate) -> SparseThresholdWrapper:
    return SparseThresholdWrapper(env, predicate)
