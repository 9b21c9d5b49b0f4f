"""
Sample-Aware Entropy
Closed-form mathematics of the policy/buffer mixture: mixture rows, entropy
decomposition, alpha-skew Jensen-Shannon divergence, the exact ratio function
and the ratio form of the mixture entropy.

All entropies are in nats with the 0·log 0 = 0 convention.
"""

from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import entr, rel_entr

from utils.errors import InputValidationError, ShapeMismatchError

ROW_TOL = 1e-12
EPS_Q = 1e-12

ArrayLike = Union[np.ndarray, list, tuple]


def check_alpha(alpha: float) -> float:
    """Validate a mixture weight and return it as float."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0 or np.isnan(alpha):
        raise InputValidationError(f"mixture weight must lie in [0, 1], got {alpha}")
    return alpha


def check_stochastic(rows: ArrayLike, name: str = "rows") -> np.ndarray:
    """
    Validate probability rows along the last axis.

    Args:
        rows: Array whose last axis holds probability vectors
        name: Label used in error messages

    Returns:
        The rows as a float64 array
    """
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim == 0 or arr.shape[-1] == 0:
        raise ShapeMismatchError(f"{name} must have a nonempty last axis, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputValidationError(f"{name} contains non-finite entries")
    if np.any(arr < 0.0):
        raise InputValidationError(f"{name} has negative entries (min {arr.min():.3e})")
    sums = arr.sum(axis=-1)
    worst = float(np.max(np.abs(sums - 1.0)))
    if worst > ROW_TOL:
        raise InputValidationError(f"{name} rows must sum to 1 within {ROW_TOL}, worst deviation {worst:.3e}")
    return arr


class DiscreteDistPair(BaseModel):
    """Per-state pair of the policy row and the buffer action row."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pi_row: np.ndarray
    q_row: np.ndarray

    def __init__(self, pi_row: ArrayLike, q_row: ArrayLike):
        pi_row = check_stochastic(pi_row, "pi_row").copy()
        q_row = check_stochastic(q_row, "q_row").copy()
        if pi_row.ndim != 1 or q_row.ndim != 1:
            raise ShapeMismatchError(f"rows must be 1-D, got shapes {pi_row.shape} and {q_row.shape}")
        if pi_row.shape != q_row.shape:
            raise ShapeMismatchError(f"pi_row and q_row lengths differ: {pi_row.shape[0]} vs {q_row.shape[0]}")
        pi_row.setflags(write=False)
        q_row.setflags(write=False)
        super().__init__(pi_row=pi_row, q_row=q_row)

    @classmethod
    def of(cls, pi_row: ArrayLike, q_row: ArrayLike) -> "DiscreteDistPair":
        return cls(pi_row=pi_row, q_row=q_row)


# Array kernels. Inputs are trusted; the last axis indexes actions.

def entropy_rows(p: np.ndarray) -> np.ndarray:
    return entr(p).sum(axis=-1)


def mixture_rows(pi: np.ndarray, q: np.ndarray, alpha: float) -> np.ndarray:
    return alpha * pi + (1.0 - alpha) * q


def js_skew_rows(pi: np.ndarray, q: np.ndarray, alpha: float) -> np.ndarray:
    mix = mixture_rows(pi, q, alpha)
    total = np.zeros(mix.shape[:-1])
    if alpha > 0.0:
        total = total + alpha * rel_entr(pi, mix).sum(axis=-1)
    if alpha < 1.0:
        total = total + (1.0 - alpha) * rel_entr(q, mix).sum(axis=-1)
    return np.maximum(total, 0.0)


def ratio_rows(pi: np.ndarray, q: np.ndarray, alpha: float) -> np.ndarray:
    """R = απ / (απ + (1−α)q) with q floored to EPS_Q where the mixture vanishes."""
    if alpha >= 1.0:
        return np.ones_like(pi)
    num = alpha * pi
    den = num + (1.0 - alpha) * q
    floored = num + (1.0 - alpha) * np.maximum(q, EPS_Q)
    den = np.where(den > 0.0, den, floored)
    return num / den


def ratio_terms_rows(pi: np.ndarray, q: np.ndarray, alpha: float, ratio: np.ndarray) -> np.ndarray:
    """
    Per-action value of log R − log απ.

    Where απ vanishes the equivalent form log(1−R) − log((1−α)q) is used, and
    entries with zero mixture mass return 0 (they carry no weight).
    """
    a_pi = alpha * pi
    b_q = (1.0 - alpha) * q
    pi_side = a_pi > 0.0
    q_side = ~pi_side & (b_q > 0.0)
    out = np.zeros(np.broadcast(pi, q, ratio).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = np.log(np.where(pi_side, ratio, 1.0)) - np.log(np.where(pi_side, a_pi, 1.0))
        rhs = np.log(np.where(q_side, 1.0 - ratio, 1.0)) - np.log(np.where(q_side, b_q, 1.0))
    out = np.where(pi_side, lhs, out)
    out = np.where(q_side, rhs, out)
    return out


def entropy_via_ratio_rows(pi: np.ndarray, q: np.ndarray, alpha: float, ratio: np.ndarray) -> np.ndarray:
    terms = ratio_terms_rows(pi, q, alpha, ratio)
    return (mixture_rows(pi, q, alpha) * terms).sum(axis=-1)


# Validated operations on a single pair.

def mixture(pair: DiscreteDistPair, alpha: float) -> np.ndarray:
    """
    Mixture of the policy and buffer rows.

    Args:
        pair: Policy/buffer rows
        alpha: Mixture weight on the policy

    Returns:
        απ + (1−α)q
    """
    return mixture_rows(pair.pi_row, pair.q_row, check_alpha(alpha))


def mixture_entropy(pair: DiscreteDistPair, alpha: float) -> float:
    """Shannon entropy of the mixture row."""
    return float(entropy_rows(mixture(pair, alpha)))


def js_skew_divergence(pair: DiscreteDistPair, alpha: float) -> float:
    """
    Alpha-skew Jensen-Shannon divergence

        D = α KL(π || m) + (1−α) KL(q || m),   m = απ + (1−α)q.

    Zero when π = q or α ∈ {0, 1}; bounded above by mixing_entropy(α).
    """
    return float(js_skew_rows(pair.pi_row, pair.q_row, check_alpha(alpha)))


def mixing_entropy(alpha: float) -> float:
    """Entropy −α ln α − (1−α) ln(1−α) of the component indicator."""
    alpha = check_alpha(alpha)
    return float(entr(alpha) + entr(1.0 - alpha))


def decomposition_constant(alpha: float) -> float:
    """
    Constant term of H(m) = D + αH(π) + (1−α)H(q) + const.

    With D defined against the mixture as in js_skew_divergence the
    log-weight terms cancel and the constant is identically zero.
    """
    check_alpha(alpha)
    return 0.0


def weighted_skew_divergence(pair: DiscreteDistPair, alpha: float) -> float:
    """
    Divergence written with the weighted components,

        α Σ π log(απ / m) + (1−α) Σ q log((1−α)q / m) = D − mixing_entropy(α).

    In this form the decomposition constant is mixing_entropy(α).
    """
    return js_skew_divergence(pair, alpha) - mixing_entropy(alpha)


def ratio_closed_form(pair: DiscreteDistPair, alpha: float) -> np.ndarray:
    """
    Exact ratio function R = απ / (απ + (1−α)q).

    Args:
        pair: Policy/buffer rows
        alpha: Mixture weight

    Returns:
        Ratio row; inside (0, 1) for α ∈ (0, 1) and strictly positive rows
    """
    return ratio_rows(pair.pi_row, pair.q_row, check_alpha(alpha))


def entropy_via_ratio(pair: DiscreteDistPair, alpha: float, ratio: ArrayLike) -> float:
    """
    Mixture entropy expressed through the ratio function,

        α E_π[log R − log απ] + (1−α) E_q[log R − log απ].

    Equals mixture_entropy when R is the exact ratio.
    """
    alpha = check_alpha(alpha)
    ratio = np.asarray(ratio, dtype=np.float64)
    if ratio.shape != pair.pi_row.shape:
        raise ShapeMismatchError(f"ratio shape {ratio.shape} does not match rows {pair.pi_row.shape}")
    return float(entropy_via_ratio_rows(pair.pi_row, pair.q_row, alpha, ratio))


def ratio_identity_gap(pair: DiscreteDistPair, alpha: float) -> float:
    """
    Largest violation of log R − log απ = log(1−R) − log((1−α)q).

    Args:
        pair: Strictly positive policy/buffer rows
        alpha: Mixture weight in (0, 1)

    Returns:
        max over actions of |LHS − RHS|
    """
    alpha = check_alpha(alpha)
    if not 0.0 < alpha < 1.0:
        raise InputValidationError(f"identity check needs alpha in (0, 1), got {alpha}")
    if np.any(pair.pi_row <= 0.0) or np.any(pair.q_row <= 0.0):
        raise InputValidationError("identity check needs strictly positive rows")
    ratio = ratio_rows(pair.pi_row, pair.q_row, alpha)
    lhs = np.log(ratio) - np.log(alpha * pair.pi_row)
    rhs = np.log1p(-ratio) - np.log((1.0 - alpha) * pair.q_row)
    return float(np.max(np.abs(lhs - rhs)))
