"""
Tests for the diversity actor-critic learner and its soft actor-critic reduction.
"""

import numpy as np
import pytest
import torch

from agents.dac_agent import BatchTensors, DacAgent, build_networks
from agents.dac_losses import critic_target, policy_objective, squared_loss
from agents.replay_buffer import ReplayBuffer
from agents.sac_agent import SacAgent
from config.config import DacHyper
from networks.core import finite_difference_check
from utils.errors import UsageError

from .conftest import fill_buffer

STATE_DIM, ACTION_DIM = 3, 2


def make_buffer(seed: int = 99) -> ReplayBuffer:
    return fill_buffer(ReplayBuffer(500), np.random.default_rng(seed), 64, STATE_DIM, ACTION_DIM)


class TestConstruction:
    """Seeded network construction."""

    def test_same_seed_same_parameters(self, small_hyper):
        """Two learners with one seed start from identical parameters."""
        a = DacAgent(STATE_DIM, ACTION_DIM, small_hyper, seed=3).parameter_arrays()
        b = DacAgent(STATE_DIM, ACTION_DIM, small_hyper, seed=3).parameter_arrays()
        assert a.keys() == b.keys()
        assert all(np.array_equal(a[k], b[k]) for k in a)

    def test_target_starts_equal_to_value(self, small_hyper):
        """ψ̄ is initialised as a copy of ψ."""
        nets = build_networks(STATE_DIM, ACTION_DIM, small_hyper, seed=0)
        for p, s in zip(nets.value.parameters(), nets.value_target.shadow.parameters()):
            assert torch.equal(p, s)

    def test_alpha_network_only_in_adaptive_mode(self, small_hyper):
        """The mixture-weight network exists only when α adapts."""
        assert "alpha" not in DacAgent(STATE_DIM, ACTION_DIM, small_hyper).modules()
        adaptive = small_hyper.model_copy(update={"alpha_mode": "adaptive"})
        assert "alpha" in DacAgent(STATE_DIM, ACTION_DIM, adaptive).modules()


class TestSacReduction:
    """With α fixed at 1 the learner is soft actor-critic."""

    def test_matches_reference_for_ten_steps(self, small_hyper):
        """Parameters agree with the reference learner to 1e-10 after ten steps."""
        hyper = small_hyper.model_copy(update={"alpha": 1.0})
        dac, sac = DacAgent(STATE_DIM, ACTION_DIM, hyper, seed=11), SacAgent(STATE_DIM, ACTION_DIM, hyper, seed=11)
        dac_buffer, sac_buffer = make_buffer(), make_buffer()
        dac_rng, sac_rng = np.random.default_rng(5), np.random.default_rng(5)
        for _ in range(10):
            dac.train_step(dac_buffer, dac_rng)
            sac.train_step(sac_buffer, sac_rng)
        dac_params, sac_params = dac.parameter_arrays(), sac.parameter_arrays()
        assert set(sac_params) <= set(dac_params)
        for key, expected in sac_params.items():
            assert np.max(np.abs(dac_params[key] - expected)) <= 1e-10, key

    def test_ratio_is_pinned(self, small_hyper):
        """R ≡ 1 and the ratio network receives zero gradient."""
        hyper = small_hyper.model_copy(update={"alpha": 1.0})
        agent = DacAgent(STATE_DIM, ACTION_DIM, hyper, seed=0)
        batch, _, noise = agent.draw(make_buffer(), np.random.default_rng(0))
        b = BatchTensors.of(batch)
        assert torch.equal(agent.ratio_values(b.states, b.actions), torch.ones(len(batch), dtype=torch.float64))
        step = agent.ratio_objective_grad(batch, noise)
        assert all(float(g.abs().max()) == 0.0 for g in step.grads)
        metrics = agent.train_step(make_buffer(), np.random.default_rng(1))
        assert metrics.mean_ratio == 1.0
        assert metrics.mean_js_div == 0.0


class TestGradients:
    """Analytic gradients against central differences."""

    def test_critic_gradient(self, small_hyper):
        """∂L_Q/∂φ1 matches finite differences."""
        agent = DacAgent(STATE_DIM, ACTION_DIM, small_hyper, seed=2)
        batch, _, _ = agent.draw(make_buffer(), np.random.default_rng(2))
        b = BatchTensors.of(batch)

        def loss():
            next_values = agent.nets.value_target(b.next_states).squeeze(-1)
            target = critic_target(b.rewards, b.dones, next_values, small_hyper.beta, small_hyper.gamma)
            return squared_loss(agent.nets.q1(torch.cat([b.states, b.actions], dim=-1)).squeeze(-1), target)

        step = agent.q_loss_grad(batch, 1)
        report = finite_difference_check(loss, list(agent.nets.q1.parameters()), step.grads)
        assert report.max_relative_error < 1e-5

    def test_policy_gradient(self, small_hyper):
        """The reparameterised policy gradient matches finite differences at fixed noise."""
        agent = DacAgent(STATE_DIM, ACTION_DIM, small_hyper, seed=4)
        batch, _, noise = agent.draw(make_buffer(), np.random.default_rng(4))
        b = BatchTensors.of(batch)

        def objective():
            actions, log_pi, _ = agent.nets.policy.sample(b.states, noise)
            log_ratio = torch.log(agent.ratio_values(b.states, actions))
            return policy_objective(
                agent.q_min(b.states, actions)[:, None], log_ratio[:, None], log_pi[:, None], small_hyper.alpha
            )

        step = agent.policy_objective_grad(batch, noise)
        report = finite_difference_check(objective, list(agent.nets.policy.parameters()), step.grads)
        assert report.max_relative_error < 1e-4

    def test_alpha_gradient(self, small_hyper):
        """The ξ gradient matches finite differences of the returned loss with the slope held fixed."""
        hyper = small_hyper.for_env(ACTION_DIM, alpha_mode="adaptive", hidden_sizes=[5], batch_size=6)
        agent = DacAgent(STATE_DIM, ACTION_DIM, hyper, seed=5)
        batch, _, noise = agent.draw(make_buffer(), np.random.default_rng(5))
        step = agent.alpha_loss_grad(batch, noise)
        slope = step.extras["slope"]

        def loss():
            with torch.enable_grad():
                return agent.alpha_loss_grad(batch, noise, slope).value

        assert loss() == pytest.approx(step.value, abs=1e-12)
        report = finite_difference_check(loss, list(agent.nets.alpha_net.parameters()), step.grads)
        assert report.max_relative_error < 1e-4

    def test_bad_critic_index(self, small_hyper):
        """Critic indices other than 1 and 2 are a usage error."""
        agent = DacAgent(STATE_DIM, ACTION_DIM, small_hyper)
        batch, _, _ = agent.draw(make_buffer(), np.random.default_rng(0))
        with pytest.raises(UsageError):
            agent.q_loss_grad(batch, 3)

    def test_alpha_gradient_requires_adaptive_mode(self, small_hyper):
        """alpha_loss_grad refuses to run with a fixed α."""
        agent = DacAgent(STATE_DIM, ACTION_DIM, small_hyper)
        batch, _, noise = agent.draw(make_buffer(), np.random.default_rng(0))
        with pytest.raises(UsageError):
            agent.alpha_loss_grad(batch, noise)


class TestValueTarget:
    """Clipping and the α = 0 reduction of the value target."""

    def test_buffer_term_respects_clip_bound(self, small_hyper):
        """Every buffer-side term lies in [−d, d]."""
        agent = DacAgent(STATE_DIM, ACTION_DIM, small_hyper, seed=1)
        batch, _, noise = agent.draw(make_buffer(), np.random.default_rng(1))
        for bound in (0.05, 0.5, float(ACTION_DIM)):
            target = agent.v_target(batch, noise, clip_bound=bound)
            assert float(target.buffer_term.abs().max()) <= bound

    def test_alpha_zero_target_is_min_q(self, small_hyper):
        """At α = 0 the target is min Q at the policy action."""
        hyper = small_hyper.model_copy(update={"alpha": 0.0})
        agent = DacAgent(STATE_DIM, ACTION_DIM, hyper, seed=1)
        batch, _, noise = agent.draw(make_buffer(), np.random.default_rng(1))
        b = BatchTensors.of(batch)
        target = agent.v_target(batch, noise)
        with torch.no_grad():
            actions, _, _ = agent.nets.policy.sample(b.states, noise)
            expected = agent.q_min(b.states, actions)
        assert torch.equal(target.values, expected)
        assert float(target.entropy.abs().max()) == 0.0

    def test_ratio_stays_inside_clip(self, small_hyper):
        """R_η is confined to [ε_R, 1 − ε_R]."""
        hyper = small_hyper.model_copy(update={"ratio_clip": 0.2})
        agent = DacAgent(STATE_DIM, ACTION_DIM, hyper, seed=0)
        batch, _, _ = agent.draw(make_buffer(), np.random.default_rng(0))
        b = BatchTensors.of(batch)
        ratio = agent.ratio_values(b.states, b.actions)
        assert float(ratio.min()) >= 0.2
        assert float(ratio.max()) <= 0.8


class TestAdaptiveAlpha:
    """Mixture-weight network range and update direction."""

    def adaptive_agent(self, small_hyper, c: float) -> DacAgent:
        hyper = small_hyper.model_copy(update={"alpha_mode": "adaptive", "control_coefficient": c})
        return DacAgent(STATE_DIM, ACTION_DIM, hyper, seed=8)

    def test_alpha_range(self, small_hyper):
        """α_ξ(s) stays in [alpha_min, alpha_max] over training."""
        agent = self.adaptive_agent(small_hyper, -4.0)
        buffer, rng = make_buffer(), np.random.default_rng(8)
        for _ in range(5):
            metrics = agent.train_step(buffer, rng)
            assert metrics.loss_alpha is not None
        states = torch.as_tensor(np.random.default_rng(0).normal(scale=5.0, size=(200, STATE_DIM)))
        alpha = agent.alpha_values(states)
        assert float(alpha.min()) >= small_hyper.alpha_min
        assert float(alpha.max()) <= small_hyper.alpha_max

    @pytest.mark.parametrize("c, increases", [(1000.0, True), (-1000.0, False)])
    def test_update_direction(self, small_hyper, c, increases):
        """A large positive c raises α; a large negative c lowers it."""
        agent = self.adaptive_agent(small_hyper, c)
        batch, _, noise = agent.draw(make_buffer(), np.random.default_rng(8))
        states = BatchTensors.of(batch).states
        before = float(agent.alpha_values(states).mean())
        step = agent.alpha_loss_grad(batch, noise)
        agent._apply(agent.optimizers["alpha"], list(agent.nets.alpha_net.parameters()), step.grads, ascent=False)
        after = float(agent.alpha_values(states).mean())
        assert (after > before) == increases
        assert after != before


class TestTrainStep:
    """Bookkeeping, determinism and checkpoints."""

    def test_metrics_and_counter(self, small_hyper):
        """Each step reports finite metrics and bumps the update counter."""
        agent = DacAgent(STATE_DIM, ACTION_DIM, small_hyper, seed=0)
        buffer, rng = make_buffer(), np.random.default_rng(0)
        for _ in range(3):
            metrics = agent.train_step(buffer, rng)
        assert agent.state.updates == 3
        assert all(np.isfinite(v) for v in agent.state.last_metrics.values())
        assert metrics.loss_alpha is None
        assert 0.0 < metrics.mean_ratio < 1.0

    def test_deterministic_replay(self, small_hyper):
        """Same seed, buffer and rng give bit-identical parameters."""
        runs = []
        for _ in range(2):
            agent = DacAgent(STATE_DIM, ACTION_DIM, small_hyper, seed=21)
            buffer, rng = make_buffer(), np.random.default_rng(21)
            for _ in range(3):
                agent.train_step(buffer, rng)
            runs.append(agent.parameter_arrays())
        assert all(np.array_equal(runs[0][k], runs[1][k]) for k in runs[0])

    def test_recent_window_draws_separate_batch(self, small_hyper):
        """With n′ smaller than the buffer the buffer-side batch comes from the newest entries."""
        hyper = small_hyper.model_copy(update={"n_prime": 8})
        agent = DacAgent(STATE_DIM, ACTION_DIM, hyper)
        batch, buffer_batch, noise = agent.draw(make_buffer(), np.random.default_rng(0))
        assert batch is not buffer_batch
        assert buffer_batch.ids.min() >= 56
        assert noise.shape == (hyper.batch_size, ACTION_DIM)

    def test_checkpoint_round_trip(self, small_hyper, tmp_path):
        """Loading a checkpoint restores the saved parameters."""
        agent = DacAgent(STATE_DIM, ACTION_DIM, small_hyper, seed=0)
        agent.train_step(make_buffer(), np.random.default_rng(0))
        agent.save_checkpoint(tmp_path / "ckpt")
        saved = agent.parameter_arrays()
        fresh = DacAgent(STATE_DIM, ACTION_DIM, small_hyper, seed=5)
        fresh.load_checkpoint(tmp_path / "ckpt")
        loaded = fresh.parameter_arrays()
        assert all(np.array_equal(saved[k], loaded[k]) for k in saved)

    def test_act_stays_in_action_box(self, small_hyper):
        """Squashed actions stay inside [−scale, scale]."""
        agent = DacAgent(STATE_DIM, ACTION_DIM, small_hyper)
        rng = np.random.default_rng(0)
        for deterministic in (False, True):
            action = agent.act(np.zeros(STATE_DIM), rng, deterministic=deterministic)
            assert action.shape == (ACTION_DIM,)
            assert np.all(np.abs(action) <= small_hyper.action_scale)
