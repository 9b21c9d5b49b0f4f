"""
Tests that the property suites pass on the implementation and catch injected faults.
"""

import numpy as np
import pytest

from verification import suites
from verification.oracles import soft_policy_iteration
from envs.random_mdp import random_finite_mdp


@pytest.fixture
def suite_rng():
    return np.random.default_rng(7)


class TestSuitesPass:
    """Each suite passes with reduced trial counts."""

    @pytest.mark.parametrize(
        "run",
        [
            lambda rng: suites.entropy_decomposition(rng, 50),
            lambda rng: suites.ratio_identities(rng, 50),
            lambda rng: suites.ratio_optimum(rng, suites.Mutations(), trials=1),
            lambda rng: suites.tabular_dpi(rng, 2, 20, 5),
            lambda rng: suites.soft_collapse(rng, 2),
            lambda rng: suites.gradient_equivalence(rng, 5),
            lambda rng: suites.objective_gradients(rng, 5),
            lambda rng: suites.toy_problem(),
            lambda rng: suites.sac_reduction(rng, 1),
            lambda rng: suites.gradient_integrity(rng, 2),
            lambda rng: suites.alpha_adaptation(rng, 5),
            lambda rng: suites.clip_contract(rng, suites.Mutations(), steps=2),
            lambda rng: suites.maze_walls(rng, 2000),
            lambda rng: suites.delayed_conservation(rng, 5),
            lambda rng: suites.determinism(10),
        ],
    )
    def test_suite(self, run, suite_rng):
        """The suite reports a pass within its tolerance."""
        result = run(suite_rng)
        assert result.passed, f"{result.name}: {result.max_error} {result.detail}"
        assert result.max_error <= result.tolerance


class TestMutations:
    """Injected faults are detected."""

    def test_flipped_ratio_sign(self, suite_rng):
        """Descending instead of ascending the ratio objective fails ratio_optimum."""
        result = suites.ratio_optimum(suite_rng, suites.Mutations(flip_ratio_sign=True), trials=1)
        assert not result.passed

    def test_dropped_clip(self, suite_rng):
        """An unclipped value target fails clip_contract."""
        result = suites.clip_contract(suite_rng, suites.Mutations(drop_clip=True), steps=2)
        assert not result.passed


class TestOracles:
    """Reference implementations."""

    def test_soft_policy_iteration_converges(self):
        """Soft policy iteration stops once the policy settles and J never decreases."""
        mdp = random_finite_mdp(4, 3, 0.8, np.random.default_rng(0))
        iterates = soft_policy_iteration(mdp, 1.0)
        assert len(iterates) < 200
        for before, after in zip(iterates, iterates[1:]):
            assert np.all(after.j_values >= before.j_values - 1e-9)


@pytest.mark.slow
def test_run_all_quick():
    """The quick run of every suite passes."""
    results = suites.run_all(seed=0, quick=True)
    assert len(results) == 15
    assert all(r.passed for r in results), [r.name for r in results if not r.passed]
