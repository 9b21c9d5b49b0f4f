"""
Tests for the FIFO replay buffer.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from agents.replay_buffer import ReplayBuffer, Transition, empirical_action_distribution
from utils.errors import InputValidationError, ShapeMismatchError


def transition(i: int) -> Transition:
    return Transition(state=[float(i)], action=[0.1 * i], reward=float(i), next_state=[i + 1.0], done=i % 2 == 0)


class TestTransition:
    """Validation of single transitions."""

    def test_non_finite_reward(self):
        """A NaN reward is rejected."""
        with pytest.raises(InputValidationError):
            Transition([0.0], [0.0], float("nan"), [0.0], False)

    def test_state_shapes_must_agree(self):
        """state and next_state must have the same shape."""
        with pytest.raises(ShapeMismatchError):
            Transition([0.0, 1.0], [0.0], 0.0, [0.0], False)

    def test_fields_are_frozen(self):
        """A stored transition cannot be reassigned and its vectors are float64."""
        step = transition(3)
        assert step.state.dtype == np.float64
        assert step.done is False
        with pytest.raises(ValidationError):
            step.reward = 1.0


class TestReplayBuffer:
    """Push, eviction and sampling."""

    def test_capacity_must_be_positive(self):
        """A zero capacity is rejected."""
        with pytest.raises(InputValidationError):
            ReplayBuffer(0)

    def test_fifo_eviction(self):
        """Beyond capacity the oldest transitions go first."""
        buffer = ReplayBuffer(3)
        for i in range(5):
            buffer.push(transition(i))
        data = buffer.ordered()
        assert len(buffer) == 3 and buffer.insertions == 5
        np.testing.assert_array_equal(data.states[:, 0], [2.0, 3.0, 4.0])
        np.testing.assert_array_equal(data.ids, [2, 3, 4])

    def test_push_many_matches_push(self):
        """push_many stores the same contents as repeated push, including overflow."""
        one, many = ReplayBuffer(4), ReplayBuffer(4)
        items = [transition(i) for i in range(7)]
        for item in items:
            one.push(item)
        many.push_many(
            np.stack([t.state for t in items]),
            np.stack([t.action for t in items]),
            [t.reward for t in items],
            np.stack([t.next_state for t in items]),
            [t.done for t in items],
        )
        a, b = one.ordered(), many.ordered()
        for name in ("states", "actions", "rewards", "next_states", "dones", "ids"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_dimension_mismatch(self):
        """A transition with a different action width is rejected."""
        buffer = ReplayBuffer(10)
        buffer.push(transition(0))
        with pytest.raises(ShapeMismatchError):
            buffer.push(Transition([0.0], [0.0, 0.0], 0.0, [0.0], False))

    def test_growth_past_initial_allocation(self):
        """The buffer grows beyond its first allocation without losing data."""
        buffer = ReplayBuffer(5000)
        for i in range(3000):
            buffer.push(transition(i))
        data = buffer.ordered()
        np.testing.assert_array_equal(data.states[:, 0], np.arange(3000.0))

    def test_sample_from_empty(self):
        """Sampling an empty buffer raises InputValidationError."""
        with pytest.raises(InputValidationError):
            ReplayBuffer(10).sample_batch(4, np.random.default_rng(0))

    def test_sample_is_seeded(self, rng):
        """The same generator state draws the same minibatch."""
        buffer = ReplayBuffer(100)
        for i in range(50):
            buffer.push(transition(i))
        first = buffer.sample_batch(16, np.random.default_rng(9))
        second = buffer.sample_batch(16, np.random.default_rng(9))
        np.testing.assert_array_equal(first.ids, second.ids)
        np.testing.assert_array_equal(first.states[:, 0], first.ids.astype(np.float64))

    def test_recent_window(self):
        """A window of N' draws only from the newest N' transitions."""
        buffer = ReplayBuffer(100)
        for i in range(60):
            buffer.push(transition(i))
        batch = buffer.sample_batch(500, np.random.default_rng(0), n_prime=10)
        assert batch.ids.min() >= 50
        window = buffer.sample_recent_window(5, 10, np.random.default_rng(0))
        assert all(t.state[0] >= 50.0 for t in window)

    def test_window_larger_than_size(self):
        """A window wider than the stored count covers the whole buffer."""
        buffer = ReplayBuffer(100)
        for i in range(5):
            buffer.push(transition(i))
        batch = buffer.sample_batch(200, np.random.default_rng(1), n_prime=50)
        assert set(batch.ids.tolist()) == {0, 1, 2, 3, 4}

    def test_window_beyond_capacity(self):
        """A window wider than the capacity is a usage mistake."""
        buffer = ReplayBuffer(10)
        buffer.push(transition(0))
        with pytest.raises(InputValidationError):
            buffer.sample_batch(1, np.random.default_rng(0), n_prime=11)

    def test_minibatch_transitions(self):
        """sample_minibatch returns Transition objects."""
        buffer = ReplayBuffer(10)
        buffer.push(transition(3))
        batch = buffer.sample_minibatch(2, np.random.default_rng(0))
        assert len(batch) == 2 and batch[0].reward == 3.0 and batch[0].done is False


class TestDumpRestore:
    """Checkpointing the buffer."""

    def test_restore_reproduces_sampling(self, tmp_path):
        """A restored buffer draws the same minibatches as the original."""
        buffer = ReplayBuffer(8)
        for i in range(13):
            buffer.push(transition(i))
        buffer.dump(tmp_path / "buffer")
        restored = ReplayBuffer.restore(tmp_path / "buffer")
        assert (restored.capacity, restored.insertions, len(restored)) == (8, 13, 8)
        a = buffer.sample_batch(32, np.random.default_rng(4))
        b = restored.sample_batch(32, np.random.default_rng(4))
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.ids, b.ids)

    def test_refuses_empty_dump(self, tmp_path):
        """An empty buffer is not written."""
        with pytest.raises(InputValidationError):
            ReplayBuffer(4).dump(tmp_path / "empty")


class TestEmpiricalActionDistribution:
    """Tabular action counts from the buffer."""

    def test_counts(self):
        """Rows are normalised counts; unvisited states are uniform."""
        buffer = ReplayBuffer(10)
        for state, action in ((0, 0), (0, 0), (0, 1), (1, 2)):
            buffer.push(Transition([float(state)], [float(action)], 0.0, [0.0], False))
        q = empirical_action_distribution(buffer, lambda s: int(s[0]), 3, 3)
        np.testing.assert_allclose(q.probs[0], [2 / 3, 1 / 3, 0.0])
        np.testing.assert_allclose(q.probs[1], [0.0, 0.0, 1.0])
        np.testing.assert_allclose(q.probs[2], [1 / 3] * 3)

    def test_recent_window_counts(self):
        """n_prime restricts the counts to the newest transitions."""
        buffer = ReplayBuffer(10)
        for action in (0, 0, 1):
            buffer.push(Transition([0.0], [float(action)], 0.0, [0.0], False))
        q = empirical_action_distribution(buffer, lambda s: 0, 1, 2, n_prime=1)
        np.testing.assert_array_equal(q.probs[0], [0.0, 1.0])

    def test_out_of_range_index(self):
        """An action index beyond n_actions raises InputValidationError."""
        buffer = ReplayBuffer(10)
        buffer.push(Transition([0.0], [5.0], 0.0, [0.0], False))
        with pytest.raises(InputValidationError):
            empirical_action_distribution(buffer, lambda s: 0, 1, 2)
