"""
Finite MDP
Exact transition/reward tables, tabular policies and action distributions,
diverse Q evaluation by linear solve and by repeated Bellman backups, and the
plain-text table format.
"""

from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from utils.errors import InputValidationError, InternalSolverError, ShapeMismatchError
from .sample_entropy import (
    DiscreteDistPair,
    check_alpha,
    check_stochastic,
    entropy_rows,
    entropy_via_ratio_rows,
    mixture_entropy,
    mixture_rows,
    ratio_rows,
)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


class FiniteMdp(BaseModel):
    """
    Discounted finite MDP with dense tables.

    Tables are validated before the model is built and stored as read-only
    float64 arrays.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_states: int
    n_actions: int
    transition: np.ndarray
    reward: np.ndarray
    gamma: float
    initial_state_dist: np.ndarray

    def __init__(
        self,
        n_states: int,
        n_actions: int,
        transition,
        reward,
        gamma: float,
        initial_state_dist=None,
    ):
        s, a = int(n_states), int(n_actions)
        if s < 1 or a < 1:
            raise InputValidationError(f"n_states and n_actions must be positive, got {s}, {a}")
        if not 0.0 <= gamma < 1.0:
            raise InputValidationError(f"gamma must lie in [0, 1), got {gamma}")
        transition = np.asarray(transition, dtype=np.float64)
        if transition.shape != (s, a, s):
            raise ShapeMismatchError(f"transition must have shape {(s, a, s)}, got {transition.shape}")
        check_stochastic(transition, "transition")
        reward = np.asarray(reward, dtype=np.float64)
        if reward.shape != (s, a):
            raise ShapeMismatchError(f"reward must have shape {(s, a)}, got {reward.shape}")
        if not np.all(np.isfinite(reward)):
            raise InputValidationError("reward contains non-finite entries")
        init = np.full(s, 1.0 / s) if initial_state_dist is None else np.asarray(initial_state_dist, dtype=np.float64)
        if init.shape != (s,):
            raise ShapeMismatchError(f"initial_state_dist must have shape {(s,)}, got {init.shape}")
        check_stochastic(init, "initial_state_dist")
        super().__init__(
            n_states=s,
            n_actions=a,
            transition=_frozen(transition),
            reward=_frozen(reward),
            gamma=float(gamma),
            initial_state_dist=_frozen(init),
        )


class _StochasticTable(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    probs: np.ndarray

    def __init__(self, probs):
        arr = check_stochastic(probs, "probs")
        if arr.ndim != 2:
            raise ShapeMismatchError(f"probs must be a (states, actions) table, got shape {arr.shape}")
        super().__init__(probs=_frozen(arr))

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def uniform(cls, n_states: int, n_actions: int):
        return cls(probs=np.full((n_states, n_actions), 1.0 / n_actions))


class TabularPolicy(_StochasticTable):
    """Per-state action probabilities of the policy."""


class TabularActionDistribution(_StochasticTable):
    """Per-state action distribution of the replay buffer."""


def _check_shapes(mdp: FiniteMdp, *tables: _StochasticTable) -> None:
    for table in tables:
        if table.probs.shape != (mdp.n_states, mdp.n_actions):
            raise ShapeMismatchError(
                f"table shape {table.probs.shape} does not match MDP ({mdp.n_states}, {mdp.n_actions})"
            )


def _check_q_table(mdp: FiniteMdp, q_table: np.ndarray) -> np.ndarray:
    q_table = np.asarray(q_table, dtype=np.float64)
    if q_table.shape != (mdp.n_states, mdp.n_actions):
        raise ShapeMismatchError(f"Q table shape {q_table.shape} does not match MDP")
    return q_table


def mixture_entropy_table(pi: TabularPolicy, q: TabularActionDistribution, alpha: float) -> np.ndarray:
    """
    Per-state sample-aware entropy H(απ + (1−α)q).

    At α=0 the bonus is dropped entirely, so evaluation reduces to the
    no-entropy case.
    """
    if alpha == 0.0:
        return np.zeros(pi.n_states)
    return entropy_rows(mixture_rows(pi.probs, q.probs, alpha))


def state_values(q_table: np.ndarray, pi: TabularPolicy, q: TabularActionDistribution, alpha: float) -> np.ndarray:
    """Diverse state values E_π[Q(s,·)] + H(q_mix(·|s)) for every state."""
    alpha = check_alpha(alpha)
    return (pi.probs * q_table).sum(axis=1) + mixture_entropy_table(pi, q, alpha)


def state_values_ratio_form(
    q_table: np.ndarray, pi: TabularPolicy, q: TabularActionDistribution, alpha: float
) -> np.ndarray:
    """
    Diverse state values written with the closed-form ratio,

        E_π[Q + α log R − α log απ] + (1−α) E_q[log R − log απ].
    """
    alpha = check_alpha(alpha)
    if alpha == 0.0:
        return (pi.probs * q_table).sum(axis=1)
    ratio = ratio_rows(pi.probs, q.probs, alpha)
    return (pi.probs * q_table).sum(axis=1) + entropy_via_ratio_rows(pi.probs, q.probs, alpha, ratio)


def diverse_state_value(
    q_table: np.ndarray, pi: TabularPolicy, q: TabularActionDistribution, alpha: float, s: int
) -> float:
    """
    Diverse value of one state.

    Args:
        q_table: (states, actions) Q table
        pi: Policy
        q: Buffer action distribution
        alpha: Mixture weight
        s: State index

    Returns:
        E_π[Q(s,·)] + H(απ(·|s) + (1−α)q(·|s)), or E_π[Q(s,·)] alone at α=0
    """
    if not 0 <= s < pi.n_states:
        raise InputValidationError(f"state {s} out of range [0, {pi.n_states})")
    expected = float(np.dot(pi.probs[s], np.asarray(q_table)[s]))
    if check_alpha(alpha) == 0.0:
        return expected
    pair = DiscreteDistPair.of(pi.probs[s], q.probs[s])
    return expected + mixture_entropy(pair, alpha)


def bellman_backup(
    q_table: np.ndarray,
    mdp: FiniteMdp,
    pi: TabularPolicy,
    q: TabularActionDistribution,
    alpha: float,
    beta: float,
) -> np.ndarray:
    """
    One application of the diverse Bellman operator.

    (T Q)(s,a) = r(s,a)/β + γ Σ_s' P(s'|s,a) V(s'), with V in ratio form.

    Returns:
        New (states, actions) Q table
    """
    if beta <= 0.0:
        raise InputValidationError(f"beta must be > 0, got {beta}")
    _check_shapes(mdp, pi, q)
    q_table = _check_q_table(mdp, q_table)
    values = state_values_ratio_form(q_table, pi, q, alpha)
    return mdp.reward / beta + mdp.gamma * (mdp.transition @ values)


def evaluate_diverse_q(
    mdp: FiniteMdp,
    pi: TabularPolicy,
    q: TabularActionDistribution,
    alpha: float,
    beta: float,
) -> np.ndarray:
    """
    True diverse Q function of a fixed policy by exact linear solve.

    Solves (I − γ P Π) Q = r/β + γ P h where h(s) is the sample-aware entropy
    and Π maps a Q table to E_π[Q(s,·)].

    Args:
        mdp: Finite MDP
        pi: Policy to evaluate
        q: Buffer action distribution
        alpha: Mixture weight in [0, 1]
        beta: Entropy coefficient (> 0)

    Returns:
        (states, actions) Q table
    """
    alpha = check_alpha(alpha)
    if beta <= 0.0:
        raise InputValidationError(f"beta must be > 0, got {beta}")
    _check_shapes(mdp, pi, q)
    n_s, n_a = mdp.n_states, mdp.n_actions
    p_flat = mdp.transition.reshape(n_s * n_a, n_s)
    averaging = np.zeros((n_s, n_s * n_a))
    for s in range(n_s):
        averaging[s, s * n_a:(s + 1) * n_a] = pi.probs[s]
    h = mixture_entropy_table(pi, q, alpha)
    lhs = np.eye(n_s * n_a) - mdp.gamma * p_flat @ averaging
    rhs = mdp.reward.reshape(-1) / beta + mdp.gamma * p_flat @ h
    try:
        solution = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as e:
        raise InternalSolverError(f"Diverse policy evaluation failed: {e}") from e
    if not np.all(np.isfinite(solution)):
        raise InternalSolverError("Diverse policy evaluation produced non-finite values")
    return solution.reshape(n_s, n_a)


def iterate_backups(
    mdp: FiniteMdp,
    pi: TabularPolicy,
    q: TabularActionDistribution,
    alpha: float,
    beta: float,
    n_iters: int,
    q_init: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Apply bellman_backup n_iters times starting from q_init (zeros by default)."""
    q_table = np.zeros((mdp.n_states, mdp.n_actions)) if q_init is None else np.asarray(q_init, dtype=np.float64)
    for _ in range(n_iters):
        q_table = bellman_backup(q_table, mdp, pi, q, alpha, beta)
    return q_table


def one_step_mdp(n_actions: int, gamma: float = 0.0) -> FiniteMdp:
    """
    Two-state MDP: every action in s0 moves to the absorbing state s1, reward 0.

    Args:
        n_actions: Number of actions (>= 2)
        gamma: Discount factor

    Returns:
        FiniteMdp starting in s0
    """
    if n_actions < 2:
        raise InputValidationError(f"n_actions must be >= 2, got {n_actions}")
    transition = np.zeros((2, n_actions, 2))
    transition[:, :, 1] = 1.0
    return FiniteMdp(
        n_states=2,
        n_actions=n_actions,
        transition=transition,
        reward=np.zeros((2, n_actions)),
        gamma=gamma,
        initial_state_dist=np.array([1.0, 0.0]),
    )


# Plain-text table format:
#   S A gamma
#   T s a s' p      (nonzero transitions)
#   R s a r         (every state-action pair)
#   I s p           (initial distribution, only when not uniform)

def format_mdp(mdp: FiniteMdp) -> str:
    """Render an MDP in the plain-text table format."""
    lines: List[str] = [f"{mdp.n_states} {mdp.n_actions} {float(mdp.gamma)!r}"]
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            for s_next in range(mdp.n_states):
                p = float(mdp.transition[s, a, s_next])
                if p != 0.0:
                    lines.append(f"T {s} {a} {s_next} {p!r}")
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            lines.append(f"R {s} {a} {float(mdp.reward[s, a])!r}")
    init = mdp.initial_state_dist
    if not np.array_equal(init, np.full(mdp.n_states, 1.0 / mdp.n_states)):
        for s in range(mdp.n_states):
            if init[s] != 0.0:
                lines.append(f"I {s} {float(init[s])!r}")
    return "\n".join(lines) + "\n"


def parse_mdp(text: str) -> FiniteMdp:
    """
    Parse the plain-text table format.

    Blank lines and lines starting with '#' are ignored. Transition entries
    not listed are zero.
    """
    records = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            records.append((number, line.split()))
    if not records:
        raise InputValidationError("MDP text is empty")

    number, header = records[0]
    try:
        n_states, n_actions, gamma = int(header[0]), int(header[1]), float(header[2])
        if len(header) != 3:
            raise ValueError("expected 'S A gamma'")
    except (ValueError, IndexError) as e:
        raise InputValidationError(f"line {number}: bad header {' '.join(header)!r}: {e}") from e
    if n_states < 1 or n_actions < 1:
        raise InputValidationError(f"line {number}: sizes must be positive")

    transition = np.zeros((n_states, n_actions, n_states))
    reward = np.zeros((n_states, n_actions))
    init: Optional[np.ndarray] = None
    for number, fields in records[1:]:
        kind = fields[0]
        try:
            if kind == "T" and len(fields) == 5:
                s, a, s_next, p = int(fields[1]), int(fields[2]), int(fields[3]), float(fields[4])
                transition[s, a, s_next] = p
            elif kind == "R" and len(fields) == 4:
                s, a, r = int(fields[1]), int(fields[2]), float(fields[3])
                reward[s, a] = r
            elif kind == "I" and len(fields) == 3:
                if init is None:
                    init = np.zeros(n_states)
                init[int(fields[1])] = float(fields[2])
            else:
                raise ValueError(f"unknown record {' '.join(fields)!r}")
        except (ValueError, IndexError) as e:
            raise InputValidationError(f"line {number}: {e}") from e
        if min(int(x) for x in fields[1:-1]) < 0:
            raise InputValidationError(f"line {number}: negative index")
    return FiniteMdp(
        n_states=n_states,
        n_actions=n_actions,
        transition=transition,
        reward=reward,
        gamma=gamma,
        initial_state_dist=init,
    )


def read_mdp(path: Union[str, Path]) -> FiniteMdp:
    """Load an MDP table file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputValidationError(f"Reading MDP file {path} failed: {e}") from e
    return parse_mdp(text)


def write_mdp(mdp: FiniteMdp, path: Union[str, Path]) -> None:
    """Write an MDP table file."""
    Path(path).write_text(format_mdp(mdp), encoding="utf-8")
