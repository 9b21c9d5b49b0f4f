"""
Diversity Actor-Critic Agent
Policy, ratio, twin critic, value, target value and mixture-weight networks
with the practical losses of sample-aware entropy regularisation. With the
mixture weight fixed at 1 the ratio is pinned to 1 and the learner reduces to
soft actor-critic.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn
from pydantic import BaseModel, ConfigDict

from config.config import DacHyper
from networks.core import DTYPE, EmaTracker, GaussianPolicyHead, Mlp
from utils.errors import UsageError
from .base_agent import BaseLearner, GradientStep, StepMetrics
from .dac_losses import (
    alpha_slope,
    alpha_surrogate,
    critic_target,
    js_estimate,
    l2_penalty,
    policy_objective,
    ratio_objective,
    squared_loss,
    v_target_terms,
)
from .replay_buffer import ReplayBuffer, TransitionBatch

logger = logging.getLogger("dac.agent")


class DacNetworks(BaseModel):
    """Parameter bundle θ, η, φ1, φ2, ψ, ψ̄ and (adaptive mode) ξ."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    policy: GaussianPolicyHead
    q1: Mlp
    q2: Mlp
    value: Mlp
    value_target: EmaTracker
    ratio: Mlp
    alpha_net: Optional[Mlp] = None


def build_networks(state_dim: int, action_dim: int, hyper: DacHyper, seed: int) -> DacNetworks:
    """
    Initialise every network from one seeded generator.

    Construction order is policy, q1, q2, value, ratio, alpha so a learner
    building only the first four draws identical parameters for the same seed.
    """
    generator = torch.Generator().manual_seed(int(seed))
    hidden = list(hyper.hidden_sizes)
    policy = GaussianPolicyHead(
        state_dim, action_dim, hidden, squash=hyper.squash, action_scale=hyper.action_scale, generator=generator
    )
    q1 = Mlp([state_dim + action_dim, *hidden, 1], generator=generator)
    q2 = Mlp([state_dim + action_dim, *hidden, 1], generator=generator)
    value = Mlp([state_dim, *hidden, 1], generator=generator)
    ratio = Mlp([state_dim + action_dim, *hidden, 1], output_activation="sigmoid", generator=generator)
    alpha_net = None
    if hyper.adaptive:
        alpha_net = Mlp([state_dim, *hidden, 1], output_activation="sigmoid", generator=generator)
    return DacNetworks(
        policy=policy,
        q1=q1,
        q2=q2,
        value=value,
        value_target=EmaTracker(value, hyper.tau),
        ratio=ratio,
        alpha_net=alpha_net,
    )


@dataclass
class BatchTensors:
    states: torch.Tensor
    actions: torch.Tensor
    rewards: torch.Tensor
    next_states: torch.Tensor
    dones: torch.Tensor

    @classmethod
    def of(cls, batch: TransitionBatch) -> "BatchTensors":
        def t(x):
            return torch.as_tensor(x, dtype=DTYPE)

        return cls(t(batch.states), t(batch.actions), t(batch.rewards), t(batch.next_states), t(batch.dones))


@dataclass
class ValueTarget:
    """Detached value target and its diagnostics, all of shape (batch,)."""
    values: torch.Tensor
    buffer_term: torch.Tensor
    entropy: torch.Tensor
    alpha: torch.Tensor
    js_div: float
    mean_ratio: float


class DacAgent(BaseLearner):
    """
    Diversity actor-critic learner.

    All gradients of a train_step are computed from the parameters as they
    were before the step, then applied in the order θ, η, φ1, φ2, ψ, EMA of ψ̄,
    ξ. One Gaussian noise draw per step is shared by every reparameterised
    policy sample.
    """

    def __init__(self, state_dim: int, action_dim: int, hyper: DacHyper, seed: int = 0):
        super().__init__(state_dim, action_dim, hyper, seed)
        self.nets = build_networks(state_dim, action_dim, hyper, seed)
        self.policy = self.nets.policy
        self.ratio_pinned = (not hyper.adaptive) and hyper.alpha == 1.0
        lr = hyper.learning_rate
        self.optimizers: Dict[str, torch.optim.Optimizer] = {
            "policy": torch.optim.Adam(self.nets.policy.parameters(), lr=lr),
            "ratio": torch.optim.Adam(self.nets.ratio.parameters(), lr=lr),
            "q1": torch.optim.Adam(self.nets.q1.parameters(), lr=lr),
            "q2": torch.optim.Adam(self.nets.q2.parameters(), lr=lr),
            "value": torch.optim.Adam(self.nets.value.parameters(), lr=lr),
        }
        if self.nets.alpha_net is not None:
            self.optimizers["alpha"] = torch.optim.Adam(self.nets.alpha_net.parameters(), lr=lr)

    def modules(self) -> Dict[str, nn.Module]:
        modules = {
            "policy": self.nets.policy,
            "ratio": self.nets.ratio,
            "q1": self.nets.q1,
            "q2": self.nets.q2,
            "value": self.nets.value,
            "value_target": self.nets.value_target.shadow,
        }
        if self.nets.alpha_net is not None:
            modules["alpha"] = self.nets.alpha_net
        return modules

    # Network evaluations

    def alpha_values(self, states: torch.Tensor) -> torch.Tensor:
        """Mixture weight per state; α_ξ(s) ∈ [alpha_min, alpha_max] in adaptive mode."""
        if self.nets.alpha_net is None:
            return torch.full((states.shape[0],), self.hyper.alpha, dtype=DTYPE)
        span = self.hyper.alpha_max - self.hyper.alpha_min
        return self.hyper.alpha_min + span * self.nets.alpha_net(states).squeeze(-1)

    def _alpha_arg(self, states: torch.Tensor):
        return self.alpha_values(states).detach() if self.hyper.adaptive else self.hyper.alpha

    def ratio_values(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        """R_η(s, a) clipped to [ε_R, 1 − ε_R]; identically 1 when pinned."""
        if self.ratio_pinned:
            return torch.ones(states.shape[0], dtype=DTYPE)
        eps = self.hyper.ratio_clip
        raw = self.nets.ratio(torch.cat([states, actions], dim=-1)).squeeze(-1)
        return torch.clamp(raw, eps, 1.0 - eps)

    def _log_ratios(self, states: torch.Tensor, actions: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        if self.ratio_pinned:
            zeros = torch.zeros(states.shape[0], dtype=DTYPE)
            return zeros, zeros
        ratio = self.ratio_values(states, actions)
        return torch.log(ratio), torch.log1p(-ratio)

    def q_min(self, states: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        sa = torch.cat([states, actions], dim=-1)
        return torch.min(self.nets.q1(sa), self.nets.q2(sa)).squeeze(-1)

    # Gradient operations

    def policy_objective_grad(self, batch: TransitionBatch, noise: torch.Tensor) -> GradientStep:
        """Ascent gradient of E[min Q + α log R − α log π] with reparameterised actions."""
        b = BatchTensors.of(batch)
        actions, log_pi, _ = self.nets.policy.sample(b.states, noise)
        log_ratio, _ = self._log_ratios(b.states, actions)
        objective = policy_objective(
            self.q_min(b.states, actions)[:, None], log_ratio[:, None], log_pi[:, None], self._alpha_arg(b.states)
        )
        params = list(self.nets.policy.parameters())
        grads = list(torch.autograd.grad(objective, params))
        self._check_finite("policy objective", objective, grads)
        return GradientStep(float(objective), grads)

    def ratio_objective_grad(self, batch: TransitionBatch, noise: torch.Tensor) -> GradientStep:
        """Ascent gradient of E[α E_π log R + (1−α) E_D log(1−R)]."""
        params = list(self.nets.ratio.parameters())
        if self.ratio_pinned:
            return GradientStep(0.0, [torch.zeros_like(p) for p in params])
        b = BatchTensors.of(batch)
        with torch.no_grad():
            policy_actions, _, _ = self.nets.policy.sample(b.states, noise)
        log_ratio_pi, _ = self._log_ratios(b.states, policy_actions)
        _, log_one_minus_d = self._log_ratios(b.states, b.actions)
        objective = ratio_objective(log_ratio_pi[:, None], log_one_minus_d[:, None], self._alpha_arg(b.states))
        grads = list(torch.autograd.grad(objective, params))
        self._check_finite("ratio objective", objective, grads)
        return GradientStep(float(objective), grads)

    def q_loss_grad(self, batch: TransitionBatch, index: int) -> GradientStep:
        """Descent gradient of E[½(Q_φi(s,a) − r/β − γ(1−done)V̄(s'))²]."""
        if index not in (1, 2):
            raise UsageError(f"critic index must be 1 or 2, got {index}")
        critic = self.nets.q1 if index == 1 else self.nets.q2
        b = BatchTensors.of(batch)
        with torch.no_grad():
            next_values = self.nets.value_target(b.next_states).squeeze(-1)
            target = critic_target(b.rewards, b.dones, next_values, self.hyper.beta, self.hyper.gamma)
        prediction = critic(torch.cat([b.states, b.actions], dim=-1)).squeeze(-1)
        loss = squared_loss(prediction, target)
        params = list(critic.parameters())
        grads = list(torch.autograd.grad(loss, params))
        self._check_finite(f"q{index} loss", loss, grads)
        return GradientStep(float(loss), grads)

    def v_target(self, batch: TransitionBatch, noise: torch.Tensor, clip_bound: Optional[float] = None) -> ValueTarget:
        """
        Clipped value target with gradients blocked.

        Args:
            batch: Minibatch whose actions are the buffer-side samples
            noise: Reparameterisation noise for the policy-side samples
            clip_bound: Override of the clip bound d (None uses the configured one)

        Returns:
            ValueTarget
        """
        bound = self.hyper.clip_bound if clip_bound is None else clip_bound
        b = BatchTensors.of(batch)
        with torch.no_grad():
            actions, log_pi, _ = self.nets.policy.sample(b.states, noise)
            log_ratio_pi, _ = self._log_ratios(b.states, actions)
            log_ratio_d, log_one_minus_d = self._log_ratios(b.states, b.actions)
            log_pi_d = self.nets.policy.log_prob_of(b.states, b.actions)
            alpha = self._alpha_arg(b.states)
            values, buffer_term, entropy = v_target_terms(
                self.q_min(b.states, actions)[:, None],
                log_ratio_pi[:, None],
                log_pi[:, None],
                log_ratio_d[:, None],
                log_pi_d[:, None],
                alpha,
                bound,
            )
            js = js_estimate(log_ratio_pi[:, None], log_one_minus_d[:, None], alpha)
            alpha_tensor = alpha if isinstance(alpha, torch.Tensor) else torch.full_like(values, alpha)
            mean_ratio = float(torch.exp(log_ratio_pi).mean())
        return ValueTarget(values, buffer_term, entropy, alpha_tensor, float(js), mean_ratio)

    def v_loss_grad(self, batch: TransitionBatch, noise: torch.Tensor, clip_bound: Optional[float] = None) -> GradientStep:
        """Descent gradient of E[½(V_ψ(s) − V̂(s))²] against the frozen target."""
        target = self.v_target(batch, noise, clip_bound)
        b = BatchTensors.of(batch)
        loss = squared_loss(self.nets.value(b.states).squeeze(-1), target.values)
        params = list(self.nets.value.parameters())
        grads = list(torch.autograd.grad(loss, params))
        self._check_finite("value loss", loss, grads)
        return GradientStep(float(loss), grads, {"target": target})

    def alpha_loss_grad(
        self, batch: TransitionBatch, noise: torch.Tensor, slope: Optional[torch.Tensor] = None
    ) -> GradientStep:
        """
        Descent gradient of E[H(q_mix) − α_ξ c] + λ‖ξ‖² in the mixture-weight
        parameters, using R_η in place of the exact ratio.

        The returned value is the differentiated scalar E[α_ξ · slope] + λ‖ξ‖²,
        with the detached slope in extras["slope"]. Passing that slope back in
        holds it fixed, which makes the value a function of ξ alone. The
        monitored objective E[H(q_mix) − α_ξ c] is in extras["objective"].
        """
        if self.nets.alpha_net is None:
            raise UsageError("alpha_loss_grad requires alpha_mode='adaptive'")
        b = BatchTensors.of(batch)
        with torch.no_grad():
            actions, log_pi, _ = self.nets.policy.sample(b.states, noise)
            log_ratio_pi, _ = self._log_ratios(b.states, actions)
            log_ratio_d, _ = self._log_ratios(b.states, b.actions)
            log_pi_d = self.nets.policy.log_prob_of(b.states, b.actions)
        alpha = self.alpha_values(b.states)
        params = list(self.nets.alpha_net.parameters())
        terms = (log_ratio_pi[:, None], log_pi[:, None], log_ratio_d[:, None], log_pi_d[:, None])
        if slope is None:
            slope = alpha_slope(alpha, *terms, self.hyper.control_coefficient, self.hyper.clip_bound)
        loss = alpha_surrogate(
            alpha, *terms, self.hyper.control_coefficient, self.hyper.clip_bound, slope=slope
        ) + l2_penalty(params, self.hyper.alpha_regularization)
        grads = list(torch.autograd.grad(loss, params))
        self._check_finite("alpha loss", loss, grads)
        with torch.no_grad():
            _, _, entropy = v_target_terms(
                torch.zeros_like(log_pi)[:, None], *terms, alpha.detach(), self.hyper.clip_bound
            )
            objective = float((entropy - alpha.detach() * self.hyper.control_coefficient).mean())
        return GradientStep(float(loss), grads, {"slope": slope, "objective": objective})

    # Update

    def draw(self, buffer: ReplayBuffer, rng: np.random.Generator) -> Tuple[TransitionBatch, TransitionBatch, torch.Tensor]:
        """
        Minibatch, buffer-side minibatch and noise for one step.

        The buffer-side minibatch is drawn separately only when the q′ window
        is active and smaller than the buffer.
        """
        m = self.hyper.batch_size
        batch = buffer.sample_batch(m, rng)
        n_prime = self.hyper.n_prime
        if n_prime is not None and n_prime < len(buffer):
            buffer_batch = buffer.sample_batch(m, rng, n_prime)
        else:
            buffer_batch = batch
        noise = torch.as_tensor(rng.standard_normal((m, self.action_dim)), dtype=DTYPE)
        return batch, buffer_batch, noise

    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator) -> StepMetrics:
        batch, buffer_batch, noise = self.draw(buffer, rng)

        policy_step = self.policy_objective_grad(batch, noise)
        ratio_step = self.ratio_objective_grad(buffer_batch, noise)
        q1_step = self.q_loss_grad(batch, 1)
        q2_step = self.q_loss_grad(batch, 2)
        value_step = self.v_loss_grad(buffer_batch, noise)
        alpha_step = self.alpha_loss_grad(buffer_batch, noise) if self.hyper.adaptive else None

        self._apply(self.optimizers["policy"], list(self.nets.policy.parameters()), policy_step.grads, ascent=True)
        if not self.ratio_pinned:
            self._apply(self.optimizers["ratio"], list(self.nets.ratio.parameters()), ratio_step.grads, ascent=True)
        self._apply(self.optimizers["q1"], list(self.nets.q1.parameters()), q1_step.grads, ascent=False)
        self._apply(self.optimizers["q2"], list(self.nets.q2.parameters()), q2_step.grads, ascent=False)
        self._apply(self.optimizers["value"], list(self.nets.value.parameters()), value_step.grads, ascent=False)
        self.nets.value_target.update(self.nets.value)
        if alpha_step is not None:
            self._apply(self.optimizers["alpha"], list(self.nets.alpha_net.parameters()), alpha_step.grads, ascent=False)

        target: ValueTarget = value_step.extras["target"]
        metrics = StepMetrics(
            loss_q1=q1_step.value,
            loss_q2=q2_step.value,
            loss_v=value_step.value,
            obj_pi=policy_step.value,
            obj_ratio=ratio_step.value,
            mean_alpha=float(target.alpha.mean()),
            mean_entropy=float(target.entropy.mean()),
            mean_js_div=target.js_div,
            mean_ratio=target.mean_ratio,
            clip_min=float(target.buffer_term.min()),
            clip_max=float(target.buffer_term.max()),
            loss_alpha=None if alpha_step is None else alpha_step.extras["objective"],
        )
        self.state.updates += 1
        self.state.last_metrics = metrics.model_dump(exclude_none=True)
        return metrics
