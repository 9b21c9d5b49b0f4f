"""
Tests for the float64 network core.
"""

import math

import numpy as np
import pytest
import torch

from networks.core import (
    DTYPE,
    EmaTracker,
    GaussianPolicyHead,
    Mlp,
    as_tensor,
    finite_difference_check,
    forward,
    grad,
    load_arrays,
    load_module_arrays,
    module_arrays,
    sample_action,
    save_arrays,
)
from utils.errors import InputValidationError, NoRecordedPassError, ShapeMismatchError


def generator(seed=0):
    return torch.Generator().manual_seed(seed)


class TestMlp:
    """Feed-forward networks."""

    def test_layer_sizes(self):
        """Fewer than two sizes or a zero width is rejected."""
        with pytest.raises(InputValidationError):
            Mlp([3])
        with pytest.raises(InputValidationError):
            Mlp([3, 0, 1])

    def test_seeded_initialisation(self):
        """The same generator seed gives identical parameters."""
        a, b = Mlp([3, 8, 1], generator=generator(5)), Mlp([3, 8, 1], generator=generator(5))
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)
            assert pa.dtype == torch.float64

    def test_initial_bounds(self):
        """Parameters lie within ±1/sqrt(fan_in), the last layer scaled by final_scale."""
        net = Mlp([4, 16, 2], final_scale=0.1, generator=generator())
        assert net.layers[0].weight.abs().max() <= 0.5
        assert net.layers[1].weight.abs().max() <= 0.1 / 4.0

    def test_sigmoid_output(self):
        """A sigmoid head maps into (0, 1)."""
        net = Mlp([2, 8, 1], output_activation="sigmoid", generator=generator())
        out = forward(net, np.random.default_rng(0).normal(size=(32, 2)) * 10.0)
        assert torch.all(out > 0.0) and torch.all(out < 1.0)

    def test_input_width_mismatch(self):
        """Inputs of the wrong width raise ShapeMismatchError."""
        net = Mlp([3, 4, 1], generator=generator())
        with pytest.raises(ShapeMismatchError):
            forward(net, np.zeros((2, 5)))


class TestRecordedGradients:
    """grad() on a pass kept by record()."""

    def test_grad_requires_record(self):
        """grad() without record() raises NoRecordedPassError."""
        net = Mlp([2, 4, 1], generator=generator())
        with pytest.raises(NoRecordedPassError):
            grad(net, torch.ones(1, 1, dtype=DTYPE))

    def test_record_is_consumed(self):
        """A recorded pass serves exactly one grad() call."""
        net = Mlp([2, 4, 1], generator=generator())
        net.record(np.ones((3, 2)))
        grad(net, np.ones((3, 1)))
        with pytest.raises(NoRecordedPassError):
            grad(net, np.ones((3, 1)))

    def test_adjoint_shape(self):
        """The adjoint must match the output shape."""
        net = Mlp([2, 4, 1], generator=generator())
        net.record(np.ones((3, 2)))
        with pytest.raises(ShapeMismatchError):
            grad(net, np.ones((2, 1)))

    def test_linear_network_gradients(self):
        """For a single linear layer the weight gradient is adjointᵀ·inputs."""
        net = Mlp([3, 1], generator=generator())
        inputs = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 0.0]])
        net.record(inputs)
        result = grad(net, np.array([[1.0], [2.0]]))
        np.testing.assert_allclose(result.parameters["layers.0.weight"].numpy(), [[2.0, 0.0, 3.0]])
        np.testing.assert_allclose(result.parameters["layers.0.bias"].numpy(), [3.0])
        weight = net.layers[0].weight.detach().numpy()
        np.testing.assert_allclose(result.inputs.numpy(), np.array([[1.0], [2.0]]) @ weight)

    def test_finite_difference_agreement(self):
        """Recorded gradients of a random network match central differences."""
        net = Mlp([3, 6, 6, 2], generator=generator(3))
        inputs = np.random.default_rng(3).normal(size=(5, 3))
        adjoint = np.random.default_rng(4).normal(size=(5, 2))
        net.record(inputs)
        analytic = grad(net, adjoint).parameters

        def loss():
            return (net(as_tensor(inputs)) * as_tensor(adjoint)).sum()

        report = finite_difference_check(loss, list(net.parameters()), list(analytic.values()))
        assert report.max_relative_error < 1e-6


class TestGaussianPolicyHead:
    """Reparameterised squashed Gaussian policy."""

    def test_squashed_actions_in_box(self):
        """Squashed samples stay inside [−scale, scale]."""
        head = GaussianPolicyHead(2, 3, [8], action_scale=2.0, generator=generator())
        actions, log_prob, noise = sample_action(head, np.zeros((64, 2)), generator=generator(1))
        assert actions.shape == (64, 3) and log_prob.shape == (64,) and noise.shape == (64, 3)
        assert torch.all(actions.abs() <= 2.0)

    def test_given_noise_is_used(self):
        """The same noise gives the same action."""
        head = GaussianPolicyHead(2, 1, [8], generator=generator())
        noise = np.full((4, 1), 0.3)
        first, _, _ = sample_action(head, np.ones((4, 2)), noise)
        second, _, _ = sample_action(head, np.ones((4, 2)), noise)
        assert torch.equal(first, second)

    def test_log_prob_of_sampled_action(self):
        """log_prob_of reproduces the log density returned by sample."""
        head = GaussianPolicyHead(2, 2, [8], generator=generator())
        states = as_tensor(np.random.default_rng(0).normal(size=(16, 2)))
        with torch.no_grad():
            actions, log_prob, _ = head.sample(states, generator=generator(2))
            again = head.log_prob_of(states, actions)
        np.testing.assert_allclose(again.numpy(), log_prob.numpy(), atol=1e-8)

    def test_unsquashed_log_density(self):
        """Without squashing the density is the plain diagonal Gaussian."""
        head = GaussianPolicyHead(1, 1, [4], squash=False, generator=generator())
        state = as_tensor([[0.5]])
        with torch.no_grad():
            mean, log_std = head.distribution_params(state)
            action, log_prob, _ = head.sample(state, noise=torch.zeros(1, 1, dtype=DTYPE))
        assert torch.equal(action, mean)
        expected = -float(log_std) - 0.5 * math.log(2.0 * math.pi)
        assert float(log_prob) == pytest.approx(expected, abs=1e-12)

    def test_squashed_density_integrates_to_one(self):
        """The tanh-corrected density of a 1-D head integrates to 1 over (−1, 1)."""
        head = GaussianPolicyHead(1, 1, [4], final_scale=1.0, generator=generator(7))
        grid = torch.linspace(-1.0 + 1e-9, 1.0 - 1e-9, 200_001, dtype=DTYPE).reshape(-1, 1)
        state = torch.zeros(grid.shape[0], 1, dtype=DTYPE)
        with torch.no_grad():
            density = torch.exp(head.log_prob_of(state, grid))
        assert float(torch.trapezoid(density, grid.reshape(-1))) == pytest.approx(1.0, abs=1e-3)

    def test_deterministic_action(self):
        """The deterministic action is the squashed mean."""
        head = GaussianPolicyHead(2, 2, [8], action_scale=0.5, generator=generator())
        state = as_tensor([[0.1, -0.2]])
        with torch.no_grad():
            mean, _ = head.distribution_params(state)
            assert torch.allclose(head.deterministic(state), 0.5 * torch.tanh(mean))

    def test_rejects_bad_scale(self):
        """action_scale must be positive."""
        with pytest.raises(InputValidationError):
            GaussianPolicyHead(1, 1, [4], action_scale=0.0)


class TestEmaTracker:
    """Exponential moving average of parameters."""

    def test_update_rule(self):
        """shadow ← (1−τ)·shadow + τ·source."""
        source = Mlp([2, 3, 1], generator=generator(1))
        tracker = EmaTracker(source, tau=0.25)
        before = [p.clone() for p in tracker.shadow.parameters()]
        with torch.no_grad():
            for p in source.parameters():
                p.add_(1.0)
        tracker.update(source)
        for old, new, src in zip(before, tracker.shadow.parameters(), source.parameters()):
            assert torch.allclose(new, 0.75 * old + 0.25 * src)

    def test_shadow_is_independent(self):
        """The shadow is a copy that takes no gradients."""
        source = Mlp([2, 3, 1], generator=generator(1))
        tracker = EmaTracker(source)
        assert all(not p.requires_grad for p in tracker.shadow.parameters())
        assert tracker.shadow is not source

    def test_tau_range(self):
        """τ must lie in [0, 1]."""
        with pytest.raises(InputValidationError):
            EmaTracker(Mlp([1, 1]), tau=1.5)


class TestCheckpointContainer:
    """Flat binary arrays with a text manifest."""

    def test_save_and_load(self, tmp_path):
        """Names, shapes and values come back unchanged."""
        arrays = {"a": np.arange(6.0).reshape(2, 3), "b": np.array(2.5)}
        save_arrays(tmp_path / "ckpt", arrays)
        loaded = load_arrays(tmp_path / "ckpt")
        assert list(loaded) == ["a", "b"]
        np.testing.assert_array_equal(loaded["a"], arrays["a"])
        assert loaded["b"].shape == () and float(loaded["b"]) == 2.5
        assert (tmp_path / "ckpt.manifest").read_text().splitlines() == ["a 2,3", "b "]

    def test_truncated_binary(self, tmp_path):
        """A binary shorter than its manifest is rejected."""
        save_arrays(tmp_path / "ckpt", {"a": np.ones(4)})
        data = (tmp_path / "ckpt.bin").read_bytes()
        (tmp_path / "ckpt.bin").write_bytes(data[:16])
        with pytest.raises(ShapeMismatchError):
            load_arrays(tmp_path / "ckpt")

    def test_module_arrays(self, tmp_path):
        """Module parameters restore into a freshly initialised module."""
        source, target = Mlp([2, 4, 1], generator=generator(1)), Mlp([2, 4, 1], generator=generator(2))
        save_arrays(tmp_path / "net", module_arrays({"net": source}))
        load_module_arrays({"net": target}, load_arrays(tmp_path / "net"))
        for a, b in zip(source.parameters(), target.parameters()):
            assert torch.equal(a, b)

    def test_rejects_whitespace_names(self, tmp_path):
        """Array names may not contain whitespace."""
        with pytest.raises(InputValidationError):
            save_arrays(tmp_path / "ckpt", {"bad name": np.ones(1)})
