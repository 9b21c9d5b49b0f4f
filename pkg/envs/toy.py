"""
One-Step Toy Problem
A single decision in s0 among N actions, after which the episode ends. The
replay buffer already holds one sample of every action but the last.
"""

from typing import Optional, Tuple

import numpy as np

from agents.replay_buffer import ReplayBuffer, Transition, empirical_action_distribution
from tabular.finite_mdp import FiniteMdp, TabularActionDistribution, one_step_mdp
from utils.errors import InputValidationError
from .base_env import BaseEnv, StepResult


def _state_index(state: np.ndarray) -> int:
    return int(round(float(state[0])))


def one_step_toy(n_actions: int, gamma: float = 0.0) -> Tuple[FiniteMdp, ReplayBuffer]:
    """
    The toy MDP together with a buffer preloaded with actions 0..N−2 in s0.

    States and actions are stored as their indices.
    """
    mdp = one_step_mdp(n_actions, gamma)
    buffer = ReplayBuffer(capacity=max(n_actions, 1))
    for action in range(n_actions - 1):
        buffer.push(Transition(state=[0.0], action=[float(action)], reward=0.0, next_state=[1.0], done=True))
    return mdp, buffer


def toy_buffer_rows(buffer: ReplayBuffer, n_actions: int) -> TabularActionDistribution:
    """Empirical q of the toy buffer over states {s0, s1}."""
    return empirical_action_distribution(buffer, _state_index, 2, n_actions)


class OneStepToyEnv(BaseEnv):
    """
    Continuous relaxation of the toy problem.

    The action in [−1, 1] is split into n_actions equal bins; the last bin is
    the action missing from the preloaded buffer. Every episode terminates
    after one step with reward 0.
    """

    name = "toy"

    def __init__(self, n_actions: int = 10):
        if n_actions < 2:
            raise InputValidationError(f"n_actions must be >= 2, got {n_actions}")
        super().__init__(state_dim=1, action_dim=1, horizon=1)
        self.n_actions = n_actions

    def bin_of(self, action) -> int:
        a = float(np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[0], -1.0, 1.0))
        return min(int(np.floor((a + 1.0) / 2.0 * self.n_actions)), self.n_actions - 1)

    def bin_centre(self, index: int) -> float:
        return -1.0 + (2.0 * index + 1.0) / self.n_actions

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        self.elapsed = 0
        return np.zeros(1)

    def step(self, action: np.ndarray) -> StepResult:
        self._tick()
        return StepResult(
            observation=np.zeros(1),
            reward=0.0,
            terminated=True,
            info={"bin": self.bin_of(action)},
        )

    def preloaded_buffer(self, copies: int = 1, capacity: Optional[int] = None) -> ReplayBuffer:
        """Buffer holding `copies` samples at the centre of every bin but the last."""
        buffer = ReplayBuffer(capacity or max(copies * (self.n_actions - 1), 1))
        for _ in range(copies):
            for index in range(self.n_actions - 1):
                buffer.push(Transition(
                    state=np.zeros(1), action=[self.bin_centre(index)], reward=0.0, next_state=np.zeros(1), done=True
                ))
        return buffer
