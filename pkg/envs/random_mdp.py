"""
Random Finite MDPs
Dirichlet transition rows and uniform rewards for property tests of the
tabular solvers.
"""

import numpy as np

from tabular.finite_mdp import FiniteMdp, TabularActionDistribution, TabularPolicy
from utils.errors import InputValidationError


def random_finite_mdp(
    n_states: int,
    n_actions: int,
    gamma: float,
    rng: np.random.Generator,
    concentration: float = 1.0,
    reward_scale: float = 1.0,
) -> FiniteMdp:
    """
    Draw an MDP with P(·|s,a) ~ Dirichlet(concentration) and r ~ U(−scale, scale).

    Args:
        n_states: Number of states
        n_actions: Number of actions
        gamma: Discount factor in [0, 1)
        rng: Random generator
        concentration: Dirichlet concentration (small values give sparse rows)
        reward_scale: Half-width of the reward range

    Returns:
        FiniteMdp with a uniform initial distribution
    """
    if concentration <= 0:
        raise InputValidationError(f"concentration must be > 0, got {concentration}")
    transition = rng.dirichlet(np.full(n_states, concentration), size=(n_states, n_actions))
    reward = rng.uniform(-reward_scale, reward_scale, size=(n_states, n_actions))
    return FiniteMdp(n_states=n_states, n_actions=n_actions, transition=transition, reward=reward, gamma=gamma)


def random_policy(n_states: int, n_actions: int, rng: np.random.Generator) -> TabularPolicy:
    return TabularPolicy(probs=rng.dirichlet(np.ones(n_actions), size=n_states))


def random_buffer_distribution(
    n_states: int, n_actions: int, rng: np.random.Generator, floor: float = 0.05
) -> TabularActionDistribution:
    """Strictly positive q rows, entries drawn from U(floor, 1) and normalised."""
    raw = rng.uniform(floor, 1.0, size=(n_states, n_actions))
    return TabularActionDistribution(probs=raw / raw.sum(axis=1, keepdims=True))
