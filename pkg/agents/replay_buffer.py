"""
Replay Buffer
FIFO store of transitions with uniform minibatch sampling, recent-window
sampling and tabular action-count extraction.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from networks.core import load_arrays, save_arrays
from tabular.finite_mdp import TabularActionDistribution
from utils.errors import InputValidationError, ShapeMismatchError

logger = logging.getLogger("dac.replay")

DEFAULT_CAPACITY = 1_000_000
_INITIAL_ALLOCATION = 1024


def _vector(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if arr.ndim != 1:
        raise ShapeMismatchError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputValidationError(f"{name} contains non-finite entries")
    return arr


class Transition(BaseModel):
    """One environment step (s, a, r, s', done)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool

    def __init__(self, state, action, reward: float, next_state, done: bool):
        state, next_state = _vector(state, "state"), _vector(next_state, "next_state")
        reward = float(reward)
        if not np.isfinite(reward):
            raise InputValidationError("reward is not finite")
        if state.shape != next_state.shape:
            raise ShapeMismatchError(f"state {state.shape} and next_state {next_state.shape} differ")
        super().__init__(
            state=state, action=_vector(action, "action"), reward=reward, next_state=next_state, done=bool(done)
        )


@dataclass
class TransitionBatch:
    """Stacked minibatch; ids are insertion numbers (0 = first transition ever pushed)."""
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray
    ids: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]


class ReplayBuffer:
    """
    Ring buffer of transitions with strictly FIFO eviction.

    Storage grows by doubling until it reaches capacity; afterwards the oldest
    transition is overwritten. Logical age index k = 0 is the oldest stored
    transition.
    """

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise InputValidationError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.insertions = 0
        self._size = 0
        self._state_dim: Optional[int] = None
        self._action_dim: Optional[int] = None
        self._states = self._actions = self._next_states = None
        self._rewards = self._dones = None

    def __len__(self) -> int:
        return self._size

    @property
    def state_dim(self) -> Optional[int]:
        return self._state_dim

    @property
    def action_dim(self) -> Optional[int]:
        return self._action_dim

    def _allocate(self, length: int) -> None:
        def grow(old: Optional[np.ndarray], shape) -> np.ndarray:
            new = np.zeros(shape, dtype=np.float64)
            if old is not None:
                new[: old.shape[0]] = old
            return new

        self._states = grow(self._states, (length, self._state_dim))
        self._actions = grow(self._actions, (length, self._action_dim))
        self._next_states = grow(self._next_states, (length, self._state_dim))
        self._rewards = grow(self._rewards, (length,))
        self._dones = grow(self._dones, (length,))

    def _reserve(self, count: int) -> None:
        allocated = 0 if self._states is None else self._states.shape[0]
        needed = min(self.capacity, self.insertions + count) if self._size < self.capacity else self.capacity
        if needed > allocated:
            length = max(allocated, min(_INITIAL_ALLOCATION, self.capacity))
            while length < needed:
                length = min(2 * length, self.capacity)
            self._allocate(length)

    def _check_dims(self, state_dim: int, action_dim: int) -> None:
        if self._state_dim is None:
            self._state_dim, self._action_dim = state_dim, action_dim
        elif (state_dim, action_dim) != (self._state_dim, self._action_dim):
            raise ShapeMismatchError(
                f"transition dims (state {state_dim}, action {action_dim}) do not match buffer "
                f"(state {self._state_dim}, action {self._action_dim})"
            )

    def push(self, transition: Transition) -> None:
        """Append one transition, evicting the oldest beyond capacity."""
        self._check_dims(transition.state.shape[0], transition.action.shape[0])
        self._reserve(1)
        pos = self.insertions % self.capacity
        self._states[pos] = transition.state
        self._actions[pos] = transition.action
        self._rewards[pos] = transition.reward
        self._next_states[pos] = transition.next_state
        self._dones[pos] = float(transition.done)
        self.insertions += 1
        self._size = min(self._size + 1, self.capacity)

    def push_many(self, states, actions, rewards, next_states, dones) -> None:
        """Append stacked transitions in order; equivalent to repeated push()."""
        states = np.asarray(states, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.float64)
        next_states = np.asarray(next_states, dtype=np.float64)
        rewards = np.asarray(rewards, dtype=np.float64).reshape(-1)
        dones = np.asarray(dones, dtype=np.float64).reshape(-1)
        n = states.shape[0]
        if states.ndim != 2 or actions.ndim != 2 or next_states.shape != states.shape:
            raise ShapeMismatchError("push_many expects (n, dim) state/action arrays and matching next_states")
        if actions.shape[0] != n or rewards.shape[0] != n or dones.shape[0] != n:
            raise ShapeMismatchError("push_many arrays disagree on the number of transitions")
        for name, arr in (("states", states), ("actions", actions), ("next_states", next_states), ("rewards", rewards)):
            if not np.all(np.isfinite(arr)):
                raise InputValidationError(f"{name} contains non-finite entries")
        if n == 0:
            return
        self._check_dims(states.shape[1], actions.shape[1])
        if n > self.capacity:
            skip = n - self.capacity
            self.insertions += skip
            self._size = min(self._size + skip, self.capacity)
            states, actions, rewards = states[skip:], actions[skip:], rewards[skip:]
            next_states, dones = next_states[skip:], dones[skip:]
            n = self.capacity
        self._reserve(n)
        pos = (self.insertions + np.arange(n)) % self.capacity
        self._states[pos] = states
        self._actions[pos] = actions
        self._rewards[pos] = rewards
        self._next_states[pos] = next_states
        self._dones[pos] = (dones != 0.0).astype(np.float64)
        self.insertions += n
        self._size = min(self._size + n, self.capacity)

    def _positions(self, ages: np.ndarray) -> np.ndarray:
        return (self.insertions - self._size + ages) % self.capacity

    def _draw_ages(self, m: int, rng: np.random.Generator, n_prime: Optional[int]) -> np.ndarray:
        if self._size == 0:
            raise InputValidationError("cannot sample from an empty replay buffer")
        if m < 1:
            raise InputValidationError(f"minibatch size must be >= 1, got {m}")
        window = self._size if n_prime is None else int(n_prime)
        if window < 1:
            raise InputValidationError(f"window size must be >= 1, got {n_prime}")
        if window > self.capacity:
            raise InputValidationError(f"window {window} exceeds capacity {self.capacity}")
        window = min(window, self._size)
        return self._size - window + rng.integers(0, window, size=m)

    def sample_batch(self, m: int, rng: np.random.Generator, n_prime: Optional[int] = None) -> TransitionBatch:
        """
        Draw m transitions uniformly with replacement from the newest
        min(n_prime, size) entries (the whole buffer when n_prime is None).
        """
        ages = self._draw_ages(m, rng, n_prime)
        pos = self._positions(ages)
        return TransitionBatch(
            states=self._states[pos].copy(),
            actions=self._actions[pos].copy(),
            rewards=self._rewards[pos].copy(),
            next_states=self._next_states[pos].copy(),
            dones=self._dones[pos].copy(),
            ids=self.insertions - self._size + ages,
        )

    def _as_transitions(self, batch: TransitionBatch) -> List[Transition]:
        return [
            Transition(batch.states[i], batch.actions[i], batch.rewards[i], batch.next_states[i], bool(batch.dones[i]))
            for i in range(len(batch))
        ]

    def sample_minibatch(self, m: int, rng: np.random.Generator) -> List[Transition]:
        """Uniform draw with replacement over the whole buffer."""
        return self._as_transitions(self.sample_batch(m, rng))

    def sample_recent_window(self, m: int, n_prime: int, rng: np.random.Generator) -> List[Transition]:
        """Uniform draw with replacement restricted to the newest n_prime transitions."""
        return self._as_transitions(self.sample_batch(m, rng, n_prime))

    def ordered(self) -> TransitionBatch:
        """All stored transitions from oldest to newest."""
        ages = np.arange(self._size)
        pos = self._positions(ages)
        if self._size == 0:
            empty = np.zeros((0, self._state_dim or 0))
            return TransitionBatch(empty, np.zeros((0, self._action_dim or 0)), np.zeros(0), empty.copy(), np.zeros(0), ages)
        return TransitionBatch(
            states=self._states[pos].copy(),
            actions=self._actions[pos].copy(),
            rewards=self._rewards[pos].copy(),
            next_states=self._next_states[pos].copy(),
            dones=self._dones[pos].copy(),
            ids=self.insertions - self._size + ages,
        )

    def dump(self, path: Union[str, Path]) -> None:
        """Write the buffer contents to the checkpoint container."""
        if self._size == 0:
            raise InputValidationError("refusing to dump an empty replay buffer")
        data = self.ordered()
        save_arrays(path, OrderedDict([
            ("meta", np.array([self.capacity, self.insertions, self._state_dim, self._action_dim], dtype=np.float64)),
            ("states", data.states),
            ("actions", data.actions),
            ("rewards", data.rewards),
            ("next_states", data.next_states),
            ("dones", data.dones),
        ]))

    @classmethod
    def restore(cls, path: Union[str, Path]) -> "ReplayBuffer":
        """Rebuild a buffer written by dump(); sampling with the same rng reproduces the same draws."""
        arrays = load_arrays(path)
        capacity, insertions = int(arrays["meta"][0]), int(arrays["meta"][1])
        buffer = cls(capacity)
        # replay the stored entries into the ring slots they occupied before
        buffer.insertions = insertions - arrays["states"].shape[0]
        buffer.push_many(arrays["states"], arrays["actions"], arrays["rewards"], arrays["next_states"], arrays["dones"])
        logger.info(f"Restored replay buffer with {len(buffer)} transitions from {path}")
        return buffer


def default_action_index(action: np.ndarray) -> int:
    return int(round(float(action[0])))


def empirical_action_distribution(
    buffer: ReplayBuffer,
    state_index_fn: Callable[[np.ndarray], int],
    n_states: int,
    n_actions: int,
    action_index_fn: Callable[[np.ndarray], int] = default_action_index,
    n_prime: Optional[int] = None,
) -> TabularActionDistribution:
    """
    Normalised per-state action counts N(s,a) / Σ_a' N(s,a').

    Args:
        buffer: Replay buffer
        state_index_fn: Maps a stored state vector to a state index
        n_states: Number of state indices
        n_actions: Number of action indices
        action_index_fn: Maps a stored action vector to an action index
        n_prime: Count only the newest n_prime transitions

    Returns:
        TabularActionDistribution; unvisited states get the uniform row
    """
    counts = np.zeros((n_states, n_actions))
    data = buffer.ordered()
    start = 0 if n_prime is None else max(0, len(data) - int(n_prime))
    for i in range(start, len(data)):
        s = state_index_fn(data.states[i])
        a = action_index_fn(data.actions[i])
        if not 0 <= s < n_states:
            raise InputValidationError(f"state index {s} out of range [0, {n_states})")
        if not 0 <= a < n_actions:
            raise InputValidationError(f"action index {a} out of range [0, {n_actions})")
        counts[s, a] += 1.0
    totals = counts.sum(axis=1, keepdims=True)
    probs = np.where(totals > 0.0, counts / np.where(totals > 0.0, totals, 1.0), 1.0 / n_actions)
    return TabularActionDistribution(probs=probs)
