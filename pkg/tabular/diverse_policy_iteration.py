"""
Diverse Policy Iteration
Exact tabular policy iteration for the sample-aware entropy objective:
closed-form improvement, simplex mirror ascent on the concave per-state
objective, an exact KKT maximiser used as an oracle, the iteration loop with
monotonicity checks, and the one-step toy example.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import softmax

from config.config import DpiConfig
from utils.csv_io import write_frame
from utils.errors import ConvergenceError, InputValidationError, MonotonicityViolation, ShapeMismatchError
from .finite_mdp import (
    FiniteMdp,
    TabularActionDistribution,
    TabularPolicy,
    evaluate_diverse_q,
    one_step_mdp,
    state_values,
)
from .sample_entropy import check_alpha, entropy_rows, mixture_rows, ratio_rows

logger = logging.getLogger("dac.tabular")

LOG_FLOOR = 1e-300
DPI_TRACE_SCHEMA = "dpi_trace"


def _as_table(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be a (states, actions) table, got shape {arr.shape}")
    return arr


def improve_closed_form(q_table: np.ndarray, ratio_old: np.ndarray, alpha: float) -> TabularPolicy:
    """
    Maximise the simplified objective E_π[Q + α log R_old − α log π] per state.

    The maximiser is π ∝ R_old · exp(Q/α), computed as a softmax of
    Q/α + log R_old.

    Args:
        q_table: (states, actions) Q table of the previous policy
        ratio_old: Ratio table of the previous policy, entries in [0, 1]
        alpha: Mixture weight in (0, 1]

    Returns:
        Improved TabularPolicy
    """
    alpha = check_alpha(alpha)
    if alpha == 0.0:
        raise InputValidationError("closed-form improvement needs alpha > 0")
    q_table = _as_table(q_table, "Q table")
    ratio_old = _as_table(ratio_old, "ratio table")
    if ratio_old.shape != q_table.shape:
        raise ShapeMismatchError(f"ratio table {ratio_old.shape} does not match Q table {q_table.shape}")
    if np.any(ratio_old < 0.0) or np.any(ratio_old > 1.0):
        raise InputValidationError("ratio entries must lie in [0, 1]")
    if np.any(np.all(ratio_old == 0.0, axis=1)):
        raise InputValidationError("a ratio row is identically zero")
    with np.errstate(divide="ignore"):
        logits = q_table / alpha + np.log(ratio_old)
    return TabularPolicy(probs=softmax(logits, axis=1))


def diverse_objective(pi_row: np.ndarray, q_row: np.ndarray, buffer_row: np.ndarray, alpha: float, beta: float) -> float:
    """Per-state objective β(E_π[Q] + H(απ + (1−α)q))."""
    mix = mixture_rows(pi_row, buffer_row, alpha)
    return float(beta * (np.dot(pi_row, q_row) + entropy_rows(mix)))


def diverse_objective_gradient(
    pi_row: np.ndarray, q_row: np.ndarray, buffer_row: np.ndarray, alpha: float, beta: float
) -> np.ndarray:
    """Gradient of diverse_objective with respect to the probabilities."""
    mix = mixture_rows(pi_row, buffer_row, alpha)
    return beta * (q_row - alpha * (np.log(np.maximum(mix, LOG_FLOOR)) + 1.0))


def simplified_objective(pi_row: np.ndarray, q_row: np.ndarray, ratio_old_row: np.ndarray, alpha: float, beta: float) -> float:
    """Per-state objective β E_π[Q + α log R_old − α log π]."""
    with np.errstate(divide="ignore"):
        log_ratio = np.where(pi_row > 0.0, np.log(np.maximum(ratio_old_row, LOG_FLOOR)), 0.0)
        log_pi = np.where(pi_row > 0.0, np.log(np.where(pi_row > 0.0, pi_row, 1.0)), 0.0)
    return float(beta * np.dot(pi_row, q_row + alpha * log_ratio - alpha * log_pi))


def softmax_objective_gradients(
    theta_row: np.ndarray,
    q_row: np.ndarray,
    buffer_row: np.ndarray,
    alpha: float,
    beta: float,
    ratio_old_row: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact logit gradients of the diverse and the simplified objectives for a
    softmax-parameterised policy row.

    Args:
        theta_row: Logits of the policy row
        q_row: Q values of the state
        buffer_row: Buffer action distribution of the state
        alpha: Mixture weight
        beta: Entropy coefficient
        ratio_old_row: Ratio of the reference policy (defaults to the ratio at theta_row)

    Returns:
        (gradient of the diverse objective, gradient of the simplified objective)
    """
    pi_row = softmax(np.asarray(theta_row, dtype=np.float64))
    if ratio_old_row is None:
        ratio_old_row = ratio_rows(pi_row, buffer_row, alpha)
    jacobian = np.diag(pi_row) - np.outer(pi_row, pi_row)
    grad_full = jacobian @ diverse_objective_gradient(pi_row, q_row, buffer_row, alpha, beta)
    d_simplified = beta * (
        q_row + alpha * np.log(np.maximum(ratio_old_row, LOG_FLOOR)) - alpha * (np.log(pi_row) + 1.0)
    )
    return grad_full, jacobian @ d_simplified


@dataclass
class MirrorAscentResult:
    """Outcome of a simplex mirror-ascent run."""
    point: np.ndarray
    value: float
    gap: float
    iterations: int


def mirror_ascent(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    n: int,
    start: Optional[np.ndarray] = None,
    tol: float = 1e-10,
    max_iters: int = 20_000,
    step: float = 1.0,
) -> MirrorAscentResult:
    """
    Maximise a concave function over the probability simplex with entropic
    mirror ascent and a doubling/halving step search.

    Steps are accepted when the objective rises above rounding noise, or when
    it stays within rounding of the current value while the Frank-Wolfe gap
    shrinks.
    The run stops once the gap max_a g_a − Σ_a x_a g_a is at most tol.

    Args:
        objective: Concave objective on the simplex
        gradient: Its gradient
        n: Dimension
        start: Initial point (uniform by default)
        tol: Frank-Wolfe gap tolerance
        max_iters: Iteration cap
        step: Initial step size

    Returns:
        MirrorAscentResult
    """
    x = np.full(n, 1.0 / n) if start is None else np.asarray(start, dtype=np.float64).copy()
    value = objective(x)
    grad = gradient(x)
    gap = float(np.max(grad) - np.dot(x, grad))
    eta = step
    for iteration in range(max_iters):
        if gap <= tol:
            return MirrorAscentResult(point=x, value=value, gap=gap, iterations=iteration)
        with np.errstate(divide="ignore"):
            log_x = np.log(x)
        accepted = False
        for _ in range(80):
            candidate = softmax(log_x + eta * (grad - np.max(grad)))
            cand_value = objective(candidate)
            cand_grad = gradient(candidate)
            cand_gap = float(np.max(cand_grad) - np.dot(candidate, cand_grad))
            slack = 4.0 * np.finfo(float).eps * max(1.0, abs(value))
            if cand_value > value + slack or (cand_value >= value - slack and cand_gap < gap):
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break
        x, value, grad, gap = candidate, cand_value, cand_grad, cand_gap
        eta = min(eta * 2.0, 1e12)
    if gap <= tol:
        return MirrorAscentResult(point=x, value=value, gap=gap, iterations=max_iters)
    raise ConvergenceError("Simplex mirror ascent did not converge", iterations=max_iters, residual=gap)


def exact_simplex_improve(
    q_table: np.ndarray,
    q: TabularActionDistribution,
    alpha: float,
    beta: float,
    tol: float = 1e-10,
    max_iters: int = 20_000,
) -> TabularPolicy:
    """
    Per-state global maximiser of β(E_π[Q] + H(απ + (1−α)q)) by mirror ascent
    started from the uniform row.

    Args:
        q_table: (states, actions) Q table of the previous policy
        q: Buffer action distribution
        alpha: Mixture weight in (0, 1]
        beta: Entropy coefficient (> 0)
        tol: Frank-Wolfe gap tolerance
        max_iters: Iteration cap per state

    Returns:
        Improved TabularPolicy
    """
    alpha = check_alpha(alpha)
    if alpha == 0.0:
        raise InputValidationError("simplex improvement needs alpha > 0")
    if beta <= 0.0:
        raise InputValidationError(f"beta must be > 0, got {beta}")
    q_table = _as_table(q_table, "Q table")
    if q_table.shape != q.probs.shape:
        raise ShapeMismatchError(f"Q table {q_table.shape} does not match buffer table {q.probs.shape}")
    rows = []
    for s in range(q_table.shape[0]):
        q_row, buffer_row = q_table[s], q.probs[s]
        # the maximiser does not depend on beta; optimise the unscaled objective
        try:
            result = mirror_ascent(
                lambda x: diverse_objective(x, q_row, buffer_row, alpha, 1.0),
                lambda x: diverse_objective_gradient(x, q_row, buffer_row, alpha, 1.0),
                q_table.shape[1],
                tol=tol,
                max_iters=max_iters,
            )
        except ConvergenceError as e:
            raise ConvergenceError(
                f"Simplex improvement failed in state {s}", iterations=e.iterations, residual=e.residual
            ) from e
        rows.append(result.point)
    return TabularPolicy(probs=np.vstack(rows))


def water_filling_improve(q_table: np.ndarray, q: TabularActionDistribution, alpha: float, beta: float) -> TabularPolicy:
    """
    Exact maximiser of the per-state diverse objective from its KKT conditions.

    At the optimum the mixture is m_a = max((1−α)q_a, c·exp(Q_a/α)) with the
    level c fixed by Σ m = 1, and π = (m − (1−α)q)/α.
    """
    alpha = check_alpha(alpha)
    if alpha == 0.0:
        raise InputValidationError("water filling needs alpha > 0")
    if beta <= 0.0:
        raise InputValidationError(f"beta must be > 0, got {beta}")
    q_table = _as_table(q_table, "Q table")
    rows = []
    for s in range(q_table.shape[0]):
        floor = (1.0 - alpha) * q.probs[s]
        scores = q_table[s] / alpha
        weights = np.exp(scores - np.max(scores))
        with np.errstate(divide="ignore"):
            breaks = np.where(weights > 0.0, floor / np.where(weights > 0.0, weights, 1.0), np.inf)
        order = np.argsort(breaks, kind="stable")
        b, w, l = breaks[order], weights[order], floor[order]
        cum_w, cum_l = np.cumsum(w), np.cumsum(l)
        total_l = cum_l[-1]
        finite = np.isfinite(b)
        level_sum = np.where(finite, np.where(finite, b, 0.0) * cum_w + (total_l - cum_l), np.inf)
        k = int(np.nonzero(level_sum <= 1.0)[0].max()) if np.any(level_sum <= 1.0) else 0
        c = (1.0 - (total_l - cum_l[k])) / cum_w[k]
        mix = np.maximum(floor, c * weights)
        row = np.maximum(mix - floor, 0.0) / alpha
        rows.append(row / row.sum())
    return TabularPolicy(probs=np.vstack(rows))


def greedy_improve(q_table: np.ndarray) -> TabularPolicy:
    """Uniform over the maximising actions of every state (the alpha = 0 limit)."""
    q_table = _as_table(q_table, "Q table")
    best = np.isclose(q_table, q_table.max(axis=1, keepdims=True), rtol=0.0, atol=1e-12)
    return TabularPolicy(probs=best / best.sum(axis=1, keepdims=True))


@dataclass
class DpiIterate:
    """One evaluation/improvement round."""
    iteration: int
    policy: TabularPolicy
    q_table: np.ndarray
    j_values: np.ndarray
    max_policy_delta: float


@dataclass
class DpiTrace:
    """Per-iteration record of a diverse policy iteration run."""
    iterates: List[DpiIterate] = field(default_factory=list)
    converged: bool = False

    @property
    def final(self) -> DpiIterate:
        return self.iterates[-1]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"iter": it.iteration, "state": s, "J": float(it.j_values[s]), "max_policy_delta": it.max_policy_delta}
            for it in self.iterates
            for s in range(len(it.j_values))
        ]
        return pd.DataFrame(rows, columns=["iter", "state", "J", "max_policy_delta"])

    def write_csv(self, path: Union[str, Path]) -> None:
        write_frame(self.to_frame(), path, DPI_TRACE_SCHEMA)


def run_dpi(mdp: FiniteMdp, q: TabularActionDistribution, cfg: DpiConfig, pi0: TabularPolicy) -> DpiTrace:
    """
    Alternate exact diverse policy evaluation and improvement.

    J(s) = β·V(s) is recorded for every iterate. The loop stops when the
    sup-norm policy change drops below cfg.tol or after cfg.max_iters rounds.

    Args:
        mdp: Finite MDP
        q: Buffer action distribution, held fixed
        cfg: Iteration controls
        pi0: Initial policy

    Returns:
        DpiTrace

    Raises:
        MonotonicityViolation: a Q entry or J value decreased by more than cfg.monotone_tol
    """
    trace = DpiTrace()
    policy = pi0
    previous_q: Optional[np.ndarray] = None
    previous_j: Optional[np.ndarray] = None
    for iteration in range(cfg.max_iters):
        q_table = evaluate_diverse_q(mdp, policy, q, cfg.alpha, cfg.beta)
        j_values = cfg.beta * state_values(q_table, policy, q, cfg.alpha)
        if previous_q is not None:
            q_drop = previous_q - q_table
            j_drop = previous_j - j_values
            if np.max(q_drop) > cfg.monotone_tol:
                s = int(np.unravel_index(np.argmax(q_drop), q_drop.shape)[0])
                raise MonotonicityViolation("Q table decreased", iteration, s, float(np.max(q_drop)))
            if np.max(j_drop) > cfg.monotone_tol:
                s = int(np.argmax(j_drop))
                raise MonotonicityViolation("J value decreased", iteration, s, float(j_drop[s]))

        if cfg.alpha == 0.0:
            improved = greedy_improve(q_table)
        elif cfg.improvement_mode == "closed_form":
            improved = improve_closed_form(q_table, ratio_rows(policy.probs, q.probs, cfg.alpha), cfg.alpha)
        else:
            improved = exact_simplex_improve(q_table, q, cfg.alpha, cfg.beta)

        delta = float(np.max(np.abs(improved.probs - policy.probs)))
        trace.iterates.append(DpiIterate(iteration, policy, q_table, j_values, delta))
        logger.debug(f"dpi iteration {iteration}: max policy delta {delta:.3e}")
        if delta < cfg.tol:
            trace.converged = True
            break
        previous_q, previous_j = q_table, j_values
        policy = improved

    if not trace.converged:
        logger.warning(f"Diverse policy iteration stopped at max_iters={cfg.max_iters} without converging")
    return trace


@dataclass
class ToyResult:
    """Optimal first-step behaviour on the one-step toy MDP."""
    policy_row: np.ndarray
    mixture_row: np.ndarray
    dac_expected_steps: float
    uniform_expected_steps: float


def toy_buffer_distribution(n_actions: int) -> TabularActionDistribution:
    """Buffer rows for the toy MDP: first n_actions − 1 actions seen once each in s0, s1 unvisited."""
    if n_actions < 2:
        raise InputValidationError(f"n_actions must be >= 2, got {n_actions}")
    probs = np.full((2, n_actions), 1.0 / n_actions)
    probs[0] = 0.0
    probs[0, :-1] = 1.0 / (n_actions - 1)
    return TabularActionDistribution(probs=probs)


def toy_example(n_actions: int, gamma: float = 0.0, beta: float = 1.0) -> ToyResult:
    """
    Solve the one-step toy MDP with alpha = 1/n_actions by simplex policy
    iteration and compare against the plain entropy maximiser.

    Expected steps until the unseen last action is first sampled is 1/π(last).

    Args:
        n_actions: Number of actions (>= 2)
        gamma: Discount of the toy MDP
        beta: Entropy coefficient

    Returns:
        ToyResult with the optimal s0 row and expected steps for both policies
    """
    mdp = one_step_mdp(n_actions, gamma)
    buffer = toy_buffer_distribution(n_actions)
    start = TabularPolicy.uniform(2, n_actions)
    alpha = 1.0 / n_actions
    dac = run_dpi(mdp, buffer, DpiConfig(alpha=alpha, beta=beta, improvement_mode="exact_simplex"), start)
    uniform = run_dpi(mdp, buffer, DpiConfig(alpha=1.0, beta=beta, improvement_mode="exact_simplex"), start)
    row = dac.final.policy.probs[0]
    baseline = uniform.final.policy.probs[0]
    return ToyResult(
        policy_row=row.copy(),
        mixture_row=mixture_rows(row, buffer.probs[0], alpha),
        dac_expected_steps=float(1.0 / row[-1]),
        uniform_expected_steps=float(1.0 / baseline[-1]),
    )
