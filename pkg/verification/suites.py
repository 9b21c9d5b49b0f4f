"""
Property Suites
Executable checks of the mathematical and behavioural contracts of every
package. Each suite returns a SuiteResult; mutation flags let the harness
confirm that the suites catch the faults they are meant to catch.
"""

import logging
import math
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn
from pydantic import BaseModel

from agents.dac_agent import DacAgent
from agents.dac_losses import alpha_surrogate, ratio_objective
from agents.replay_buffer import ReplayBuffer
from agents.sac_agent import SacAgent
from agents.training import run_training
from config.config import DacHyper, DpiConfig, MazeConfig
from envs.chain import ChainEnv
from envs.maze import FourRoomMaze
from envs.random_mdp import random_buffer_distribution, random_finite_mdp, random_policy
from envs.wrappers import DelayedRewardWrapper
from networks.core import DTYPE, finite_difference_check
from tabular.diverse_policy_iteration import (
    diverse_objective,
    run_dpi,
    simplified_objective,
    softmax_objective_gradients,
    toy_example,
)
from tabular.finite_mdp import TabularPolicy, bellman_backup, evaluate_diverse_q, state_values
from tabular.sample_entropy import (
    DiscreteDistPair,
    decomposition_constant,
    entropy_rows,
    entropy_via_ratio,
    js_skew_divergence,
    mixing_entropy,
    mixture_entropy,
    ratio_closed_form,
    ratio_identity_gap,
    ratio_rows,
    weighted_skew_divergence,
)
from utils.errors import MonotonicityViolation
from .oracles import central_difference, cosine, random_rows, relative_error, soft_policy_iteration

logger = logging.getLogger("dac.verify")


class Mutations(BaseModel):
    """Faults injected on purpose to show that the suites detect them."""
    flip_ratio_sign: bool = False
    drop_clip: bool = False


class SuiteResult(BaseModel):
    """Outcome of one property suite."""
    name: str
    tolerance: float
    max_error: float
    passed: bool
    seconds: float
    detail: str = ""


def _fill_buffer(buffer: ReplayBuffer, rng: np.random.Generator, n: int, state_dim: int, action_dim: int, edge: float = 0.95) -> ReplayBuffer:
    buffer.push_many(
        rng.normal(size=(n, state_dim)),
        rng.uniform(-edge, edge, size=(n, action_dim)),
        rng.normal(size=n),
        rng.normal(size=(n, state_dim)),
        (rng.uniform(size=n) < 0.1).astype(np.float64),
    )
    return buffer


def entropy_decomposition(rng: np.random.Generator, trials: int = 1000) -> SuiteResult:
    """H(q_mix) = D + αH(π) + (1−α)H(q) + constant, in both the displayed and the weighted form."""
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 17))
        pair = DiscreteDistPair.of(random_rows(rng, n), random_rows(rng, n))
        alpha = float(rng.uniform(0.01, 0.99))
        base = alpha * entropy_rows(pair.pi_row) + (1.0 - alpha) * entropy_rows(pair.q_row)
        h = mixture_entropy(pair, alpha)
        worst = max(
            worst,
            abs(h - (js_skew_divergence(pair, alpha) + base + decomposition_constant(alpha))),
            abs(h - (weighted_skew_divergence(pair, alpha) + base + mixing_entropy(alpha))),
        )
    return SuiteResult(name="entropy_decomposition", tolerance=1e-12, max_error=worst, passed=worst <= 1e-12, seconds=0.0)


def ratio_identities(rng: np.random.Generator, trials: int = 1000) -> SuiteResult:
    """Ratio-form entropy and the log-ratio identity on random rows."""
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 17))
        pair = DiscreteDistPair.of(random_rows(rng, n), random_rows(rng, n))
        alpha = float(rng.uniform(0.01, 0.99))
        ratio = ratio_closed_form(pair, alpha)
        worst = max(
            worst,
            abs(entropy_via_ratio(pair, alpha, ratio) - mixture_entropy(pair, alpha)),
            ratio_identity_gap(pair, alpha),
        )
    return SuiteResult(name="ratio_identities", tolerance=1e-12, max_error=worst, passed=worst <= 1e-12, seconds=0.0)


def train_table_ratio(
    pi_row: np.ndarray,
    q_row: np.ndarray,
    alpha: float,
    steps: int = 10_000,
    learning_rate: float = 4.0,
    flip_sign: bool = False,
) -> np.ndarray:
    """Gradient ascent of the ratio objective for a table of sigmoid logits with exact expectations."""
    logits = torch.zeros((1, len(pi_row)), dtype=DTYPE, requires_grad=True)
    pi_w = torch.as_tensor(pi_row, dtype=DTYPE).reshape(1, -1)
    q_w = torch.as_tensor(q_row, dtype=DTYPE).reshape(1, -1)
    for _ in range(steps):
        ratio = torch.sigmoid(logits)
        objective = ratio_objective(torch.log(ratio), torch.log1p(-ratio), alpha, pi_w, q_w)
        (gradient,) = torch.autograd.grad(objective, [logits])
        if flip_sign:
            gradient = -gradient
        with torch.no_grad():
            logits += learning_rate * gradient
    return torch.sigmoid(logits).detach().numpy().reshape(-1)


def ratio_optimum(rng: np.random.Generator, mutations: Mutations, trials: int = 5) -> SuiteResult:
    """A table ratio trained on the ratio objective converges to απ/(απ+(1−α)q)."""
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 6))
        pi_row, q_row = random_rows(rng, n), random_rows(rng, n)
        alpha = float(rng.uniform(0.2, 0.8))
        learned = train_table_ratio(pi_row, q_row, alpha, flip_sign=mutations.flip_ratio_sign)
        gap = np.abs(learned - ratio_rows(pi_row, q_row, alpha))
        # a diverging table ends in NaN logits
        worst = max(worst, float(np.max(gap)) if np.all(np.isfinite(gap)) else math.inf)
    return SuiteResult(name="ratio_optimum", tolerance=1e-3, max_error=worst, passed=worst <= 1e-3, seconds=0.0)


def tabular_dpi(rng: np.random.Generator, n_mdps: int = 20, n_random_policies: int = 10_000, n_pairs: int = 100) -> SuiteResult:
    """Monotone improvement, optimality against random policies and γ-contraction of the backup."""
    worst = 0.0
    detail = ""
    cfg = DpiConfig(alpha=0.5, beta=1.0, max_iters=500)
    per_mdp = max(1, n_random_policies // max(n_mdps, 1))
    for index in range(n_mdps):
        n_s, n_a = int(rng.integers(2, 11)), int(rng.integers(2, 6))
        mdp = random_finite_mdp(n_s, n_a, 0.9, rng)
        q = random_buffer_distribution(n_s, n_a, rng)
        try:
            trace = run_dpi(mdp, q, cfg, TabularPolicy.uniform(n_s, n_a))
        except MonotonicityViolation as e:
            return SuiteResult(name="tabular_dpi", tolerance=1e-8, max_error=e.drop, passed=False, seconds=0.0, detail=str(e))
        best = trace.final.j_values
        for _ in range(per_mdp):
            other = random_policy(n_s, n_a, rng)
            j_other = cfg.beta * state_values(evaluate_diverse_q(mdp, other, q, cfg.alpha, cfg.beta), other, q, cfg.alpha)
            excess = float(np.max(j_other - best))
            if excess > worst:
                worst, detail = excess, f"random policy beat DPI on MDP {index}"
    for _ in range(n_pairs):
        n_s, n_a = int(rng.integers(2, 11)), int(rng.integers(2, 6))
        mdp = random_finite_mdp(n_s, n_a, float(rng.uniform(0.1, 0.99)), rng)
        pi, q = random_policy(n_s, n_a, rng), random_buffer_distribution(n_s, n_a, rng)
        q1, q2 = rng.normal(size=(n_s, n_a)), rng.normal(size=(n_s, n_a))
        gap = np.max(np.abs(bellman_backup(q1, mdp, pi, q, 0.5, 1.0) - bellman_backup(q2, mdp, pi, q, 0.5, 1.0)))
        excess = float(gap - mdp.gamma * np.max(np.abs(q1 - q2)))
        if excess > worst:
            worst, detail = excess, "backup expanded a sup-norm distance"
    return SuiteResult(name="tabular_dpi", tolerance=1e-8, max_error=max(worst, 0.0), passed=worst <= 1e-8, seconds=0.0, detail=detail)


def soft_collapse(rng: np.random.Generator, n_mdps: int = 5) -> SuiteResult:
    """Diverse policy iteration at α=1 reproduces soft policy iteration."""
    worst = 0.0
    for _ in range(n_mdps):
        n_s, n_a = int(rng.integers(2, 7)), int(rng.integers(2, 5))
        mdp = random_finite_mdp(n_s, n_a, 0.8, rng)
        q = random_buffer_distribution(n_s, n_a, rng)
        trace = run_dpi(mdp, q, DpiConfig(alpha=1.0, beta=1.0, max_iters=100), TabularPolicy.uniform(n_s, n_a))
        oracle = soft_policy_iteration(mdp, 1.0, max_iters=100)
        for ours, theirs in zip(trace.iterates, oracle):
            worst = max(worst, float(np.max(np.abs(ours.j_values - theirs.j_values))))
    return SuiteResult(name="soft_collapse", tolerance=1e-8, max_error=worst, passed=worst <= 1e-8, seconds=0.0)


def _softmax_problem(rng: np.random.Generator):
    n = int(rng.integers(2, 7))
    theta, q_row, buffer_row = rng.normal(size=n), rng.normal(size=n), random_rows(rng, n)
    alpha, beta = float(rng.uniform(0.1, 0.9)), float(rng.uniform(0.5, 2.0))
    return theta, q_row, buffer_row, alpha, beta


def _softmax(theta: np.ndarray) -> np.ndarray:
    p = np.exp(theta - theta.max())
    return p / p.sum()


def gradient_equivalence(rng: np.random.Generator, trials: int = 50) -> SuiteResult:
    """Diverse and simplified objectives share their softmax gradient direction at the reference policy."""
    worst = 0.0
    for _ in range(trials):
        theta, q_row, buffer_row, alpha, beta = _softmax_problem(rng)
        grad_full, grad_simplified = softmax_objective_gradients(theta, q_row, buffer_row, alpha, beta)
        worst = max(worst, 1.0 - cosine(grad_full, grad_simplified))
    return SuiteResult(name="gradient_equivalence", tolerance=1e-9, max_error=worst, passed=worst <= 1e-9, seconds=0.0)


def objective_gradients(rng: np.random.Generator, trials: int = 50) -> SuiteResult:
    """Exact softmax gradients of both per-state objectives against central differences."""
    worst = 0.0
    for _ in range(trials):
        theta, q_row, buffer_row, alpha, beta = _softmax_problem(rng)
        grad_full, grad_simplified = softmax_objective_gradients(theta, q_row, buffer_row, alpha, beta)
        ratio_old = ratio_rows(_softmax(theta), buffer_row, alpha)
        numeric_full = central_difference(lambda t: diverse_objective(_softmax(t), q_row, buffer_row, alpha, beta), theta)
        numeric_simplified = central_difference(
            lambda t: simplified_objective(_softmax(t), q_row, ratio_old, alpha, beta), theta
        )
        worst = max(worst, relative_error(numeric_full, grad_full), relative_error(numeric_simplified, grad_simplified))
    return SuiteResult(name="objective_gradients", tolerance=1e-4, max_error=worst, passed=worst <= 1e-4, seconds=0.0)


def toy_problem() -> SuiteResult:
    """With α=1/N the optimal first action is the unseen one; the plain entropy maximiser needs N steps."""
    result = toy_example(10)
    error = max(
        max(0.0, 0.999 - float(result.policy_row[-1])),
        abs(result.uniform_expected_steps - 10.0),
        max(0.0, result.dac_expected_steps - 1.0 / 0.999),
    )
    return SuiteResult(name="toy_problem", tolerance=1e-6, max_error=error, passed=error <= 1e-6, seconds=0.0)


def _small_hyper(**overrides) -> DacHyper:
    values = dict(hidden_sizes=[16, 16], batch_size=32, buffer_capacity=1000)
    values.update(overrides)
    return DacHyper(**values)


def sac_reduction(rng: np.random.Generator, trials: int = 3) -> SuiteResult:
    """At α=1 one train_step moves the shared networks exactly as the independent SAC step."""
    worst = 0.0
    for _ in range(trials):
        seed = int(rng.integers(0, 2**31 - 1))
        hyper = _small_hyper(alpha=1.0, action_dim=2)
        buffer = _fill_buffer(ReplayBuffer(1000), rng, 64, 3, 2)
        dac, sac = DacAgent(3, 2, hyper, seed), SacAgent(3, 2, hyper, seed)
        dac.train_step(buffer, np.random.default_rng(seed))
        sac.train_step(buffer, np.random.default_rng(seed))
        ours, theirs = dac.parameter_arrays(), sac.parameter_arrays()
        for key, value in theirs.items():
            worst = max(worst, float(np.max(np.abs(ours[key] - value))))
    return SuiteResult(name="sac_reduction", tolerance=1e-10, max_error=worst, passed=worst <= 1e-10, seconds=0.0)


def gradient_integrity(rng: np.random.Generator, n_configs: int = 100) -> SuiteResult:
    """Network gradients of the six sampled-loss operations against central differences."""
    worst = 0.0
    for _ in range(n_configs):
        state_dim, action_dim = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        hyper = DacHyper(
            alpha=float(rng.uniform(0.1, 0.9)),
            hidden_sizes=[5],
            batch_size=6,
            action_dim=action_dim,
            squash=bool(rng.integers(0, 2)),
            gamma=float(rng.uniform(0.0, 0.99)),
            buffer_capacity=100,
        )
        seed = int(rng.integers(0, 2**31 - 1))
        agent = DacAgent(state_dim, action_dim, hyper, seed)
        adaptive = DacAgent(state_dim, action_dim, hyper.for_env(action_dim, alpha_mode="adaptive"), seed)
        buffer = _fill_buffer(ReplayBuffer(100), rng, 20, state_dim, action_dim)
        batch, _, noise = agent.draw(buffer, rng)
        slope = adaptive.alpha_loss_grad(batch, noise).extras["slope"]
        operations: Dict[str, Tuple[nn.Module, Callable]] = {
            "policy": (agent.nets.policy, lambda: agent.policy_objective_grad(batch, noise)),
            "ratio": (agent.nets.ratio, lambda: agent.ratio_objective_grad(batch, noise)),
            "q1": (agent.nets.q1, lambda: agent.q_loss_grad(batch, 1)),
            "q2": (agent.nets.q2, lambda: agent.q_loss_grad(batch, 2)),
            "value": (agent.nets.value, lambda: agent.v_loss_grad(batch, noise)),
            "alpha": (adaptive.nets.alpha_net, lambda: adaptive.alpha_loss_grad(batch, noise, slope)),
        }
        for name, (module, op) in operations.items():
            analytic = op().grads

            def loss_fn(op=op):
                with torch.enable_grad():
                    return op().value

            report = finite_difference_check(loss_fn, list(module.parameters()), analytic)
            worst = max(worst, report.max_relative_error)
    return SuiteResult(name="gradient_integrity", tolerance=1e-3, max_error=worst, passed=worst <= 1e-3, seconds=0.0)


def alpha_adaptation(rng: np.random.Generator, trials: int = 20) -> SuiteResult:
    """Analytic ξ-gradient against finite differences of the analytic-entropy loss; α_ξ stays in range."""
    worst = 0.0
    hyper = DacHyper()
    span = hyper.alpha_max - hyper.alpha_min
    for _ in range(trials):
        n = int(rng.integers(2, 6))
        pi_row, q_row = random_rows(rng, n), random_rows(rng, n)
        c = float(rng.normal(scale=2.0))
        xi0 = float(rng.normal())

        def alpha_of(xi: float) -> float:
            return hyper.alpha_min + span / (1.0 + math.exp(-xi))

        def loss(x: np.ndarray) -> float:
            a = alpha_of(float(x[0]))
            return mixture_entropy(DiscreteDistPair.of(pi_row, q_row), a) - a * c

        xi = torch.tensor([xi0], dtype=DTYPE, requires_grad=True)
        alpha = hyper.alpha_min + span * torch.sigmoid(xi)
        a_value = float(alpha.detach())
        log_ratio = torch.as_tensor(np.log(ratio_rows(pi_row, q_row, a_value)), dtype=DTYPE).reshape(1, -1)
        log_pi = torch.as_tensor(np.log(pi_row), dtype=DTYPE).reshape(1, -1)
        pi_w = torch.as_tensor(pi_row, dtype=DTYPE).reshape(1, -1)
        q_w = torch.as_tensor(q_row, dtype=DTYPE).reshape(1, -1)
        surrogate = alpha_surrogate(alpha, log_ratio, log_pi, log_ratio, log_pi, c, math.inf, pi_w, q_w)
        (analytic,) = torch.autograd.grad(surrogate, [xi])
        numeric = central_difference(loss, np.array([xi0]))
        worst = max(worst, relative_error(numeric, analytic.numpy()))

    agent = DacAgent(2, 1, _small_hyper(alpha_mode="adaptive"), int(rng.integers(0, 2**31 - 1)))
    states = torch.as_tensor(rng.normal(scale=50.0, size=(512, 2)), dtype=DTYPE)
    with torch.no_grad():
        values = agent.alpha_values(states)
    outside = float(torch.clamp(hyper.alpha_min - values, min=0.0).max() + torch.clamp(values - hyper.alpha_max, min=0.0).max())
    return SuiteResult(
        name="alpha_adaptation",
        tolerance=1e-4,
        max_error=worst,
        passed=worst <= 1e-4 and outside == 0.0,
        seconds=0.0,
        detail=f"alpha range excess {outside:.3e}",
    )


def clip_contract(rng: np.random.Generator, mutations: Mutations, steps: int = 5, bound: float = 0.25) -> SuiteResult:
    """
    The buffer-side contribution to the value target never leaves [−d, d].

    d is set below −log π of central actions under the initial policy.
    """
    action_dim = 1
    hyper = _small_hyper(action_dim=action_dim, clip_bound=math.inf if mutations.drop_clip else bound)
    agent = DacAgent(2, action_dim, hyper, int(rng.integers(0, 2**31 - 1)))
    buffer = _fill_buffer(ReplayBuffer(1000), rng, 256, 2, action_dim, edge=0.999)
    worst = 0.0
    for _ in range(steps):
        batch, buffer_batch, noise = agent.draw(buffer, rng)
        target = agent.v_target(buffer_batch, noise)
        worst = max(worst, float(target.buffer_term.abs().max()))
        metrics = agent.train_step(buffer, rng)
        worst = max(worst, abs(metrics.clip_min), abs(metrics.clip_max))
    excess = max(0.0, worst - bound)
    return SuiteResult(name="clip_contract", tolerance=0.0, max_error=excess, passed=excess == 0.0, seconds=0.0)


def maze_walls(rng: np.random.Generator, moves: int = 100_000) -> SuiteResult:
    """Random moves never end inside a wall or outside the arena."""
    maze = FourRoomMaze(MazeConfig())
    position = maze.start.copy()
    violations = 0
    for _ in range(moves):
        if rng.uniform() < 0.01:
            candidate = rng.uniform(0.0, maze.cfg.side, size=2)
            if not maze.inside_wall(candidate):
                position = candidate
        position = maze.move(position, rng.uniform(-1.0, 1.0, size=2))
        if maze.inside_wall(position) or not maze.in_bounds(position):
            violations += 1
    return SuiteResult(name="maze_walls", tolerance=0.0, max_error=float(violations), passed=violations == 0, seconds=0.0)


def delayed_conservation(rng: np.random.Generator, episodes: int = 20) -> SuiteResult:
    """Delayed rewards sum to the undiscounted return of the base environment."""
    worst = 0.0
    for _ in range(episodes):
        delay = int(rng.integers(1, 30))
        env = DelayedRewardWrapper(ChainEnv(horizon=int(rng.integers(1, 80))), delay)
        env.reset()
        delayed = base = 0.0
        done = False
        while not done:
            result = env.step(rng.uniform(-1.0, 1.0, size=1))
            delayed += result.reward
            base += result.info["base_reward"]
            done = result.done
        worst = max(worst, abs(delayed - base))
    return SuiteResult(name="delayed_conservation", tolerance=1e-12, max_error=worst, passed=worst <= 1e-12, seconds=0.0)


def determinism(steps: int = 20) -> SuiteResult:
    """Two seeded training runs emit identical record streams."""

    def run() -> List:
        hyper = _small_hyper(batch_size=8, log_interval=5, alpha_mode="adaptive")
        agent = DacAgent(1, 1, hyper, seed=7)
        return [
            (r.step, r.metric, r.value)
            for r in run_training(ChainEnv(horizon=10), agent, ReplayBuffer(100), hyper, steps, np.random.default_rng(7))
        ]

    first, second = run(), run()
    same = len(first) == len(second) and all(
        a[:2] == b[:2] and (a[2] == b[2] or (math.isnan(a[2]) and math.isnan(b[2]))) for a, b in zip(first, second)
    )
    return SuiteResult(name="determinism", tolerance=0.0, max_error=0.0 if same else 1.0, passed=same, seconds=0.0)


def run_all(seed: int = 0, mutations: Optional[Mutations] = None, quick: bool = False) -> List[SuiteResult]:
    """
    Execute every suite.

    Args:
        seed: Seed of the shared random generator
        mutations: Faults to inject (none by default)
        quick: Shrink trial counts for smoke runs

    Returns:
        One SuiteResult per suite, in execution order
    """
    mutations = mutations or Mutations()
    rng = np.random.default_rng(seed)
    scale = 10 if quick else 1
    suites: List[Callable[[], SuiteResult]] = [
        lambda: entropy_decomposition(rng, 1000 // scale),
        lambda: ratio_identities(rng, 1000 // scale),
        lambda: ratio_optimum(rng, mutations),
        lambda: tabular_dpi(rng, 20 // scale if quick else 20, 10_000 // scale, 100 // scale),
        lambda: soft_collapse(rng),
        lambda: gradient_equivalence(rng),
        lambda: objective_gradients(rng),
        lambda: toy_problem(),
        lambda: sac_reduction(rng),
        lambda: gradient_integrity(rng, 100 // scale),
        lambda: alpha_adaptation(rng),
        lambda: clip_contract(rng, mutations),
        lambda: maze_walls(rng, 100_000 // scale),
        lambda: delayed_conservation(rng),
        lambda: determinism(),
    ]
    results = []
    for suite in suites:
        started = time.perf_counter()
        result = suite()
        result.seconds = time.perf_counter() - started
        log = logger.info if result.passed else logger.error
        log(f"{result.name}: max error {result.max_error:.3e} (tolerance {result.tolerance:.0e}) in {result.seconds:.2f}s")
        results.append(result)
    return results
