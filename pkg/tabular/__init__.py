"""
Exact tabular machinery for the sample-aware entropy objective.
"""

from .diverse_policy_iteration import (
    DpiTrace,
    ToyResult,
    exact_simplex_improve,
    improve_closed_form,
    mirror_ascent,
    run_dpi,
    toy_example,
    water_filling_improve,
)
from .finite_mdp import (
    FiniteMdp,
    TabularActionDistribution,
    TabularPolicy,
    bellman_backup,
    diverse_state_value,
    evaluate_diverse_q,
    read_mdp,
    write_mdp,
)
from .sample_entropy import (
    DiscreteDistPair,
    entropy_via_ratio,
    js_skew_divergence,
    mixture,
    mixture_entropy,
    ratio_closed_form,
    ratio_identity_gap,
)

__all__ = [
    "DiscreteDistPair",
    "DpiTrace",
    "FiniteMdp",
    "TabularActionDistribution",
    "TabularPolicy",
    "ToyResult",
    "bellman_backup",
    "diverse_state_value",
    "entropy_via_ratio",
    "evaluate_diverse_q",
    "exact_simplex_improve",
    "improve_closed_form",
    "js_skew_divergence",
    "mirror_ascent",
    "mixture",
    "mixture_entropy",
    "ratio_closed_form",
    "ratio_identity_gap",
    "read_mdp",
    "run_dpi",
    "toy_example",
    "water_filling_improve",
    "write_mdp",
]
