"""
DAC Losses
Objectives, targets and surrogates of the practical learner as pure tensor
functions.

Every per-state expectation takes a (batch, k) tensor of sample values and an
optional (batch, k) weight tensor; without weights the k samples are averaged,
with weights the expectation is exact. Mixture weights may be a float or a
(batch,) tensor.
"""

import math
from typing import Optional, Tuple, Union

import torch

Alpha = Union[float, torch.Tensor]


def expect(values: torch.Tensor, weights: Optional[torch.Tensor] = None) -> torch.Tensor:
    return values.mean(dim=-1) if weights is None else (values * weights).sum(dim=-1)


def _column(alpha: Alpha) -> Alpha:
    return alpha.reshape(-1, 1) if isinstance(alpha, torch.Tensor) else float(alpha)


def _log(alpha: Alpha) -> Alpha:
    return torch.log(alpha) if isinstance(alpha, torch.Tensor) else math.log(alpha)


def _is_zero(alpha: Alpha) -> bool:
    return not isinstance(alpha, torch.Tensor) and float(alpha) == 0.0


def _clip(values: torch.Tensor, bound: Optional[float]) -> torch.Tensor:
    if bound is None or math.isinf(bound):
        return values
    return torch.clamp(values, -bound, bound)


def policy_objective(
    q_min: torch.Tensor,
    log_ratio: torch.Tensor,
    log_pi: torch.Tensor,
    alpha: Alpha,
    weights: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Ĵ_π = E[min Q + α log R − α log π]."""
    a = _column(alpha)
    return expect(q_min + a * log_ratio - a * log_pi, weights).mean()


def ratio_objective(
    log_ratio_pi: torch.Tensor,
    log_one_minus_ratio_d: torch.Tensor,
    alpha: Alpha,
    pi_weights: Optional[torch.Tensor] = None,
    d_weights: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Ĵ_R = E[α E_π[log R] + (1−α) E_D[log(1−R)]]."""
    a = alpha.reshape(-1) if isinstance(alpha, torch.Tensor) else float(alpha)
    return (a * expect(log_ratio_pi, pi_weights) + (1.0 - a) * expect(log_one_minus_ratio_d, d_weights)).mean()


def critic_target(
    rewards: torch.Tensor, dones: torch.Tensor, next_values: torch.Tensor, beta: float, gamma: float
) -> torch.Tensor:
    """Q̂ = r/β + γ(1 − done)·V̄(s')."""
    return rewards / beta + gamma * (1.0 - dones) * next_values


def squared_loss(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    return 0.5 * (prediction - target).pow(2).mean()


def v_target_terms(
    q_min: torch.Tensor,
    log_ratio_pi: torch.Tensor,
    log_pi: torch.Tensor,
    log_ratio_d: torch.Tensor,
    log_pi_d: torch.Tensor,
    alpha: Alpha,
    clip_bound: Optional[float],
    pi_weights: Optional[torch.Tensor] = None,
    d_weights: Optional[torch.Tensor] = None,
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    Clipped value target

        V̂ = E_π[min Q + α log R − α log απ] + (1−α) E_D[clip(log R − log απ, −d, d)].

    Returns:
        (V̂, clipped buffer-side term, sample-aware entropy estimate), each (batch,)
    """
    if _is_zero(alpha):
        zeros = torch.zeros(q_min.shape[0], dtype=q_min.dtype)
        return expect(q_min, pi_weights), zeros, zeros
    a = _column(alpha)
    log_a = _log(a)
    pi_side = expect(log_ratio_pi - log_a - log_pi, pi_weights)
    d_side = expect(_clip(log_ratio_d - log_a - log_pi_d, clip_bound), d_weights)
    a_flat = alpha.reshape(-1) if isinstance(alpha, torch.Tensor) else float(alpha)
    entropy = a_flat * pi_side + (1.0 - a_flat) * d_side
    return expect(q_min, pi_weights) + entropy, d_side, entropy


def alpha_slope(
    alpha_values: torch.Tensor,
    log_ratio_pi: torch.Tensor,
    log_pi: torch.Tensor,
    log_ratio_d: torch.Tensor,
    log_pi_d: torch.Tensor,
    control_coefficient: float,
    clip_bound: Optional[float],
    pi_weights: Optional[torch.Tensor] = None,
    d_weights: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Detached per-state slope E_π[log R − log απ] − c − E_D[clip(log R − log απ, −d, d)]."""
    a = alpha_values.detach().reshape(-1, 1)
    log_a = torch.log(a)
    pi_side = expect(log_ratio_pi - log_a - log_pi, pi_weights)
    d_side = expect(_clip(log_ratio_d - log_a - log_pi_d, clip_bound), d_weights)
    return (pi_side - control_coefficient - d_side).detach()


def alpha_surrogate(
    alpha_values: torch.Tensor,
    log_ratio_pi: torch.Tensor,
    log_pi: torch.Tensor,
    log_ratio_d: torch.Tensor,
    log_pi_d: torch.Tensor,
    control_coefficient: float,
    clip_bound: Optional[float],
    pi_weights: Optional[torch.Tensor] = None,
    d_weights: Optional[torch.Tensor] = None,
    slope: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    Surrogate E[α_ξ · slope] whose gradient in ξ is

        E[∇α_ξ · (E_π[log R − log α_ξ π] − c − E_D[clip(log R − log α_ξ π, −d, d)])],

    the derivative of E[H(q_mix) − α_ξ c] with R standing in for the exact ratio.
    A precomputed slope is used as given; otherwise it is taken at the current α.
    """
    if slope is None:
        slope = alpha_slope(
            alpha_values, log_ratio_pi, log_pi, log_ratio_d, log_pi_d,
            control_coefficient, clip_bound, pi_weights, d_weights,
        )
    return (alpha_values.reshape(-1) * slope).mean()


def l2_penalty(params, coefficient: float) -> torch.Tensor:
    return coefficient * sum(p.pow(2).sum() for p in params)


def js_estimate(
    log_ratio_pi: torch.Tensor,
    log_one_minus_ratio_d: torch.Tensor,
    alpha: Alpha,
    pi_weights: Optional[torch.Tensor] = None,
    d_weights: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    Lower-bound estimate α E_π[log(R/α)] + (1−α) E_D[log((1−R)/(1−α))] of the
    skew divergence, floored at 0 (the value of the constant ratio R ≡ α).
    """
    if not isinstance(alpha, torch.Tensor) and float(alpha) in (0.0, 1.0):
        return torch.zeros((), dtype=log_ratio_pi.dtype)
    a = alpha.reshape(-1) if isinstance(alpha, torch.Tensor) else float(alpha)
    log_a = torch.log(a) if isinstance(a, torch.Tensor) else math.log(a)
    log_b = torch.log1p(-a) if isinstance(a, torch.Tensor) else math.log1p(-a)
    value = a * (expect(log_ratio_pi, pi_weights) - log_a) + (1.0 - a) * (expect(log_one_minus_ratio_d, d_weights) - log_b)
    return torch.clamp(value.mean(), min=0.0)
