"""
Neural network building blocks for the learners.
"""

from .core import (
    EmaTracker,
    GaussianPolicyHead,
    Mlp,
    ema_update,
    finite_difference_check,
    forward,
    grad,
    load_arrays,
    sample_action,
    save_arrays,
)

__all__ = [
    "EmaTracker",
    "GaussianPolicyHead",
    "Mlp",
    "ema_update",
    "finite_difference_check",
    "forward",
    "grad",
    "load_arrays",
    "sample_action",
    "save_arrays",
]
