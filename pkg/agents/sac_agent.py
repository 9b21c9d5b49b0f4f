"""
Soft Actor-Critic Agent
Reference learner with twin critics, a state-value network and its EMA
target, written independently of the diversity learner's losses.
"""

from typing import Dict

import numpy as np
import torch
import torch.nn as nn

from config.config import DacHyper
from networks.core import DTYPE, EmaTracker, GaussianPolicyHead, Mlp
from .base_agent import BaseLearner, StepMetrics
from .replay_buffer import ReplayBuffer


class SacAgent(BaseLearner):
    """
    Soft actor-critic with entropy weight 1 and reward scale 1/β.

    Networks are built in the order policy, q1, q2, value from one seeded
    generator and each step draws the minibatch before the noise, so for a
    shared seed the diversity learner with α fixed at 1 follows the same
    trajectory.
    """

    def __init__(self, state_dim: int, action_dim: int, hyper: DacHyper, seed: int = 0):
        super().__init__(state_dim, action_dim, hyper, seed)
        generator = torch.Generator().manual_seed(int(seed))
        hidden = list(hyper.hidden_sizes)
        self.policy = GaussianPolicyHead(
            state_dim, action_dim, hidden, squash=hyper.squash, action_scale=hyper.action_scale, generator=generator
        )
        self.q1 = Mlp([state_dim + action_dim, *hidden, 1], generator=generator)
        self.q2 = Mlp([state_dim + action_dim, *hidden, 1], generator=generator)
        self.value = Mlp([state_dim, *hidden, 1], generator=generator)
        self.value_target = EmaTracker(self.value, hyper.tau)
        lr = hyper.learning_rate
        self.optimizers = {
            name: torch.optim.Adam(module.parameters(), lr=lr)
            for name, module in (("policy", self.policy), ("q1", self.q1), ("q2", self.q2), ("value", self.value))
        }

    def modules(self) -> Dict[str, nn.Module]:
        return {
            "policy": self.policy,
            "q1": self.q1,
            "q2": self.q2,
            "value": self.value,
            "value_target": self.value_target.shadow,
        }

    def _q_min(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        sa = torch.cat([states, actions], dim=-1)
        return torch.min(self.q1(sa), self.q2(sa)).squeeze(-1)

    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator) -> StepMetrics:
        batch = buffer.sample_batch(self.hyper.batch_size, rng)
        noise = torch.as_tensor(rng.standard_normal((self.hyper.batch_size, self.action_dim)), dtype=DTYPE)
        states = torch.as_tensor(batch.states, dtype=DTYPE)
        actions = torch.as_tensor(batch.actions, dtype=DTYPE)
        rewards = torch.as_tensor(batch.rewards, dtype=DTYPE)
        next_states = torch.as_tensor(batch.next_states, dtype=DTYPE)
        dones = torch.as_tensor(batch.dones, dtype=DTYPE)

        new_actions, log_pi, _ = self.policy.sample(states, noise)
        policy_loss = (log_pi - self._q_min(states, new_actions)).mean()
        policy_grads = torch.autograd.grad(policy_loss, list(self.policy.parameters()))

        with torch.no_grad():
            q_target = rewards / self.hyper.beta + self.hyper.gamma * (1.0 - dones) * self.value_target(next_states).squeeze(-1)
            v_target = self._q_min(states, new_actions) - log_pi
        sa = torch.cat([states, actions], dim=-1)
        q_losses, q_grads = [], []
        for critic in (self.q1, self.q2):
            loss = 0.5 * (critic(sa).squeeze(-1) - q_target).pow(2).mean()
            q_losses.append(loss)
            q_grads.append(torch.autograd.grad(loss, list(critic.parameters())))
        value_loss = 0.5 * (self.value(states).squeeze(-1) - v_target).pow(2).mean()
        value_grads = torch.autograd.grad(value_loss, list(self.value.parameters()))

        for label, value, grads in (
            ("policy objective", policy_loss, policy_grads),
            ("q1 loss", q_losses[0], q_grads[0]),
            ("q2 loss", q_losses[1], q_grads[1]),
            ("value loss", value_loss, value_grads),
        ):
            self._check_finite(label, value, list(grads))

        self._apply(self.optimizers["policy"], list(self.policy.parameters()), list(policy_grads), ascent=False)
        self._apply(self.optimizers["q1"], list(self.q1.parameters()), list(q_grads[0]), ascent=False)
        self._apply(self.optimizers["q2"], list(self.q2.parameters()), list(q_grads[1]), ascent=False)
        self._apply(self.optimizers["value"], list(self.value.parameters()), list(value_grads), ascent=False)
        self.value_target.update(self.value)

        entropy = float(-log_pi.detach().mean())
        metrics = StepMetrics(
            loss_q1=float(q_losses[0]),
            loss_q2=float(q_losses[1]),
            loss_v=float(value_loss),
            obj_pi=float(-policy_loss),
            obj_ratio=0.0,
            mean_alpha=1.0,
            mean_entropy=entropy,
            mean_js_div=0.0,
            mean_ratio=1.0,
            clip_min=0.0,
            clip_max=0.0,
        )
        self.state.updates += 1
        self.state.last_metrics = metrics.model_dump(exclude_none=True)
        return metrics
