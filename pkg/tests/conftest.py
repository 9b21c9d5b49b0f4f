"""
Shared fixtures for the test suite.
"""

import numpy as np
import pytest

from agents.replay_buffer import ReplayBuffer
from config.config import DacHyper


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_hyper():
    """Tiny networks and batches so learner tests stay fast."""
    return DacHyper(hidden_sizes=[16, 16], batch_size=16, buffer_capacity=500, log_interval=5)


def fill_buffer(buffer: ReplayBuffer, rng: np.random.Generator, n: int, state_dim: int, action_dim: int) -> ReplayBuffer:
    buffer.push_many(
        rng.normal(size=(n, state_dim)),
        rng.uniform(-0.9, 0.9, size=(n, action_dim)),
        rng.normal(size=n),
        rng.normal(size=(n, state_dim)),
        (rng.uniform(size=n) < 0.1).astype(np.float64),
    )
    return buffer


@pytest.fixture
def filled_buffer(rng):
    """64 random transitions with 3-D states and 2-D actions."""
    return fill_buffer(ReplayBuffer(500), rng, 64, 3, 2)
