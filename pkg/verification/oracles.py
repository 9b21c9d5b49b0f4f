"""
Reference Oracles
Independent implementations the property suites compare against.
"""

from dataclasses import dataclass
from typing import Callable, List

import numpy as np
from scipy.special import entr, softmax

from tabular.finite_mdp import FiniteMdp


@dataclass
class SoftIterate:
    policy: np.ndarray
    q_table: np.ndarray
    j_values: np.ndarray


def soft_policy_iteration(mdp: FiniteMdp, beta: float, tol: float = 1e-9, max_iters: int = 200) -> List[SoftIterate]:
    """
    Soft policy iteration with entropy weight 1 and reward scale 1/β.

    Evaluation solves Q = r/β + γ P (E_π[Q] + H(π)) directly over state values;
    improvement sets π ∝ exp(Q).
    """
    n_s, n_a = mdp.n_states, mdp.n_actions
    policy = np.full((n_s, n_a), 1.0 / n_a)
    iterates: List[SoftIterate] = []
    for _ in range(max_iters):
        # V = Σ_a π(Q) + H(π), Q = r/β + γ P V  ⇒  (I − γ P_π) V = r_π/β + H(π)
        p_pi = np.einsum("sa,sat->st", policy, mdp.transition)
        r_pi = (policy * mdp.reward).sum(axis=1) / beta
        h = entr(policy).sum(axis=1)
        values = np.linalg.solve(np.eye(n_s) - mdp.gamma * p_pi, r_pi + h)
        q_table = mdp.reward / beta + mdp.gamma * mdp.transition @ values
        iterates.append(SoftIterate(policy.copy(), q_table, beta * values))
        improved = softmax(q_table, axis=1)
        delta = float(np.max(np.abs(improved - policy)))
        policy = improved
        if delta < tol:
            break
    return iterates


def central_difference(f: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        up, down = x.copy(), x.copy()
        up.flat[i] += step
        down.flat[i] -= step
        grad.flat[i] = (f(up) - f(down)) / (2.0 * step)
    return grad


def relative_error(numeric: np.ndarray, analytic: np.ndarray, floor: float = 1e-12) -> float:
    scale = max(float(np.linalg.norm(numeric)), float(np.linalg.norm(analytic)), floor)
    return float(np.linalg.norm(np.asarray(numeric) - np.asarray(analytic))) / scale


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def random_rows(rng: np.random.Generator, n_actions: int, floor: float = 0.05) -> np.ndarray:
    """Strictly positive probability row with entries from U(floor, 1), normalised."""
    raw = rng.uniform(floor, 1.0, size=n_actions)
    return raw / raw.sum()
