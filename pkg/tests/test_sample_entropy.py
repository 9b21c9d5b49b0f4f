"""
Tests for the closed-form sample-aware entropy functions.
"""

import math

import numpy as np
import pytest

from tabular.sample_entropy import (
    DiscreteDistPair,
    check_alpha,
    decomposition_constant,
    entropy_rows,
    entropy_via_ratio,
    js_skew_divergence,
    mixing_entropy,
    mixture,
    mixture_entropy,
    ratio_closed_form,
    ratio_identity_gap,
    weighted_skew_divergence,
)
from utils.errors import InputValidationError, ShapeMismatchError


def random_pair(rng, n):
    pi_row = rng.uniform(0.05, 1.0, size=n)
    q_row = rng.uniform(0.05, 1.0, size=n)
    return DiscreteDistPair.of(pi_row / pi_row.sum(), q_row / q_row.sum())


class TestValidation:
    """Input checks on mixture weights and probability rows."""

    def test_alpha_outside_unit_interval(self):
        """Weights outside [0, 1] and NaN are rejected."""
        for bad in (-0.1, 1.5, float("nan")):
            with pytest.raises(InputValidationError):
                check_alpha(bad)

    def test_row_not_normalised(self):
        """A row summing to 0.9 is not a distribution."""
        with pytest.raises(InputValidationError):
            DiscreteDistPair.of([0.5, 0.4], [0.5, 0.5])

    def test_negative_entry(self):
        """Negative probabilities are rejected."""
        with pytest.raises(InputValidationError):
            DiscreteDistPair.of([1.5, -0.5], [0.5, 0.5])

    def test_length_mismatch(self):
        """Rows of different lengths raise ShapeMismatchError."""
        with pytest.raises(ShapeMismatchError):
            DiscreteDistPair.of([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_rows_are_read_only(self):
        """Stored rows cannot be modified in place."""
        pair = DiscreteDistPair.of([0.5, 0.5], [0.25, 0.75])
        with pytest.raises(ValueError):
            pair.pi_row[0] = 1.0


class TestMixture:
    """Mixture rows and their entropy."""

    def test_mixture_values(self):
        """0.5·[0.5, 0.5] + 0.5·[1, 0] = [0.75, 0.25]."""
        pair = DiscreteDistPair.of([0.5, 0.5], [1.0, 0.0])
        np.testing.assert_allclose(mixture(pair, 0.5), [0.75, 0.25])

    def test_endpoints(self):
        """α=1 gives the policy row and α=0 the buffer row."""
        pair = DiscreteDistPair.of([0.2, 0.8], [0.6, 0.4])
        np.testing.assert_array_equal(mixture(pair, 1.0), pair.pi_row)
        np.testing.assert_array_equal(mixture(pair, 0.0), pair.q_row)

    def test_uniform_entropy(self):
        """Entropy of a uniform mixture over four actions is log 4."""
        pair = DiscreteDistPair.of([0.25] * 4, [0.25] * 4)
        assert mixture_entropy(pair, 0.3) == pytest.approx(math.log(4.0), abs=1e-14)


class TestSkewDivergence:
    """The alpha-skew Jensen-Shannon divergence."""

    def test_zero_when_rows_match(self):
        """D vanishes for π = q."""
        pair = DiscreteDistPair.of([0.1, 0.2, 0.7], [0.1, 0.2, 0.7])
        assert js_skew_divergence(pair, 0.4) == pytest.approx(0.0, abs=1e-15)

    def test_zero_at_endpoints(self):
        """D vanishes for α ∈ {0, 1}."""
        pair = DiscreteDistPair.of([0.9, 0.1], [0.1, 0.9])
        assert js_skew_divergence(pair, 0.0) == 0.0
        assert js_skew_divergence(pair, 1.0) == 0.0

    def test_disjoint_support_reaches_bound(self):
        """Disjoint rows attain the upper bound mixing_entropy(α)."""
        pair = DiscreteDistPair.of([1.0, 0.0], [0.0, 1.0])
        for alpha in (0.3, 0.5, 0.8):
            assert js_skew_divergence(pair, alpha) == pytest.approx(mixing_entropy(alpha), abs=1e-14)

    def test_bounded_by_mixing_entropy(self, rng):
        """0 ≤ D ≤ mixing_entropy(α) on random rows."""
        for _ in range(200):
            pair = random_pair(rng, int(rng.integers(2, 9)))
            alpha = float(rng.uniform(0.01, 0.99))
            value = js_skew_divergence(pair, alpha)
            assert 0.0 <= value <= mixing_entropy(alpha) + 1e-15


class TestDecomposition:
    """H(q_mix) = D + αH(π) + (1−α)H(q) + constant."""

    def test_displayed_form(self, rng):
        """With D against the mixture the constant is zero."""
        for _ in range(300):
            pair = random_pair(rng, int(rng.integers(2, 17)))
            alpha = float(rng.uniform(0.01, 0.99))
            rhs = (
                js_skew_divergence(pair, alpha)
                + alpha * entropy_rows(pair.pi_row)
                + (1.0 - alpha) * entropy_rows(pair.q_row)
                + decomposition_constant(alpha)
            )
            assert abs(mixture_entropy(pair, alpha) - rhs) <= 1e-12

    def test_weighted_form(self, rng):
        """With weighted components the constant is mixing_entropy(α)."""
        for _ in range(300):
            pair = random_pair(rng, int(rng.integers(2, 17)))
            alpha = float(rng.uniform(0.01, 0.99))
            rhs = (
                weighted_skew_divergence(pair, alpha)
                + alpha * entropy_rows(pair.pi_row)
                + (1.0 - alpha) * entropy_rows(pair.q_row)
                + mixing_entropy(alpha)
            )
            assert abs(mixture_entropy(pair, alpha) - rhs) <= 1e-12

    def test_constant_is_zero(self):
        """decomposition_constant validates α and returns 0."""
        assert decomposition_constant(0.25) == 0.0
        with pytest.raises(InputValidationError):
            decomposition_constant(2.0)


class TestRatio:
    """Closed-form ratio and the ratio form of the mixture entropy."""

    def test_ratio_in_open_interval(self, rng):
        """R lies strictly inside (0, 1) for positive rows and α ∈ (0, 1)."""
        pair = random_pair(rng, 6)
        ratio = ratio_closed_form(pair, 0.5)
        assert np.all(ratio > 0.0) and np.all(ratio < 1.0)

    def test_ratio_is_one_at_alpha_one(self):
        """α=1 pins the ratio to 1."""
        pair = DiscreteDistPair.of([0.3, 0.7], [0.0, 1.0])
        np.testing.assert_array_equal(ratio_closed_form(pair, 1.0), [1.0, 1.0])

    def test_ratio_value(self):
        """R = 0.5·0.5 / (0.5·0.5 + 0.5·0.25) = 2/3."""
        pair = DiscreteDistPair.of([0.5, 0.5], [0.25, 0.75])
        assert ratio_closed_form(pair, 0.5)[0] == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_entropy_via_ratio_matches(self, rng):
        """The ratio form reproduces the mixture entropy with the exact ratio."""
        for _ in range(200):
            pair = random_pair(rng, int(rng.integers(2, 17)))
            alpha = float(rng.uniform(0.01, 0.99))
            ratio = ratio_closed_form(pair, alpha)
            assert abs(entropy_via_ratio(pair, alpha, ratio) - mixture_entropy(pair, alpha)) <= 1e-12

    def test_entropy_via_ratio_with_zero_policy_mass(self):
        """Actions the policy never takes are covered through the buffer-side form."""
        pair = DiscreteDistPair.of([1.0, 0.0], [0.5, 0.5])
        ratio = ratio_closed_form(pair, 0.5)
        assert entropy_via_ratio(pair, 0.5, ratio) == pytest.approx(mixture_entropy(pair, 0.5), abs=1e-15)

    def test_entropy_via_ratio_shape_check(self):
        """A ratio of the wrong length is rejected."""
        pair = DiscreteDistPair.of([0.5, 0.5], [0.5, 0.5])
        with pytest.raises(ShapeMismatchError):
            entropy_via_ratio(pair, 0.5, [0.5, 0.5, 0.5])

    def test_identity_gap(self, rng):
        """log R − log απ equals log(1−R) − log((1−α)q)."""
        for _ in range(200):
            pair = random_pair(rng, int(rng.integers(2, 17)))
            assert ratio_identity_gap(pair, float(rng.uniform(0.01, 0.99))) <= 1e-12

    def test_identity_gap_preconditions(self):
        """The identity needs α ∈ (0, 1) and strictly positive rows."""
        with pytest.raises(InputValidationError):
            ratio_identity_gap(DiscreteDistPair.of([0.5, 0.5], [0.5, 0.5]), 1.0)
        with pytest.raises(InputValidationError):
            ratio_identity_gap(DiscreteDistPair.of([1.0, 0.0], [0.5, 0.5]), 0.5)
