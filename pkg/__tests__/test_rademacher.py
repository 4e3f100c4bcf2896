"""
Unit tests for kernbound.rademacher module.

Tests cover:
- Statement coverage for closed-form suprema, Monte Carlo and exact estimates
- Branch coverage for families and estimation methods
- Boundary value analysis (constant suprema, p = 1 oracle)
- Error handling verification (capacity and parameter errors)
- Properties: thread-count determinism, Monte Carlo agreement with enumeration
"""
import math

import numpy as np
import pytest

from kernbound.datasets import random_dictionary
from kernbound.domain import HypothesisFamily
from kernbound.errors import CapacityError, InputError, ParameterError
from kernbound.kernels import KernelDictionary
from kernbound.options import EstimateMethod, Family
from kernbound.rademacher import (
    brute_force_sup,
    estimate_exact,
    estimate_many,
    estimate_mc,
    sup_closed_form,
    weight_grid,
)


def _family(tag=Family.L1, rho=1.0):
    return HypothesisFamily(tag=tag, rho=rho)


class TestSupClosedForm:
    """Tests for sup_closed_form."""

    # =========================================================================
    # Statement Coverage
    # =========================================================================

    class TestStatementCoverage:
        """Worked suprema."""

        def test_identity_sixteen(self, identity_dictionary):
            """K = I16: sigma^T sigma = 16 for every sigma, sup 4."""
            sigma = np.where(np.arange(16) % 3 == 0, 1.0, -1.0)
            assert sup_closed_form(identity_dictionary(16), sigma, _family()) == 4.0

        def test_rank_one(self):
            """K = ones(2): (1,-1) gives 0 and (1,1) gives 2."""
            dictionary = KernelDictionary.from_matrices([np.ones((2, 2))])
            assert sup_closed_form(dictionary, np.array([1.0, -1.0]), _family()) == 0.0
            assert sup_closed_form(dictionary, np.array([1.0, 1.0]), _family()) == 2.0

    # =========================================================================
    # Branch Coverage
    # =========================================================================

    class TestBranchCoverage:
        """Family-specific formulas."""

        def test_l2_identical_kernels_scale_by_fourth_root(self, identity_dictionary):
            """p identical kernels: L2 value is p^(1/4) times the L1 value."""
            sigma = np.array([1.0, -1.0, 1.0, 1.0])
            dictionary = identity_dictionary(4, p=5)
            l1 = sup_closed_form(dictionary, sigma, _family(Family.L1))
            l2 = sup_closed_form(dictionary, sigma, _family(Family.L2))
            assert l2 == pytest.approx(5 ** 0.25 * l1, rel=1e-12)

        def test_l2_signed_equals_l2(self, tiny_dictionary):
            """Signed sphere weights give the same supremum."""
            sigma = np.array([1.0, -1.0] * 4)
            l2 = sup_closed_form(tiny_dictionary, sigma, _family(Family.L2))
            signed = sup_closed_form(tiny_dictionary, sigma, _family(Family.L2_SIGNED))
            assert signed == l2

        def test_margin_scales_inversely(self, tiny_dictionary):
            """Halving rho doubles the supremum."""
            sigma = np.ones(8)
            base = sup_closed_form(tiny_dictionary, sigma, _family(rho=1.0))
            assert sup_closed_form(tiny_dictionary, sigma, _family(rho=0.5)) == pytest.approx(2 * base)

    # =========================================================================
    # Error Handling
    # =========================================================================

    class TestErrorHandling:
        """Malformed sign vectors."""

        def test_wrong_length(self, identity_dictionary):
            """sigma must have length m."""
            with pytest.raises(InputError):
                sup_closed_form(identity_dictionary(3), np.ones(4), _family())

        def test_non_sign_entries(self, identity_dictionary):
            """Entries must be exactly +/-1."""
            with pytest.raises(InputError):
                sup_closed_form(identity_dictionary(2), np.array([1.0, 0.5]), _family())


class TestEstimates:
    """Tests for estimate_mc, estimate_exact and estimate_many."""

    # =========================================================================
    # Statement Coverage
    # =========================================================================

    class TestStatementCoverage:
        """Worked estimates."""

        def test_mc_constant_supremum(self, identity_dictionary):
            """K = I16: every trial gives 4, so the value is 0.25 with zero stderr."""
            estimate = estimate_mc(identity_dictionary(16), _family(), n_trials=500, seed=9)
            assert estimate.value == 0.25
            assert estimate.stderr == 0.0
            assert estimate.method is EstimateMethod.MONTE_CARLO
            assert estimate.seed == 9

        def test_exact_rank_one(self):
            """K = ones(2): (2 + 0 + 0 + 2) / 4 / 2 = 0.5."""
            dictionary = KernelDictionary.from_matrices([np.ones((2, 2))])
            estimate = estimate_exact(dictionary, _family())
            assert estimate.value == 0.5
            assert estimate.trials == 4
            assert estimate.stderr == 0.0

        @pytest.mark.parametrize("m", [1, 3, 9])
        def test_exact_identity(self, identity_dictionary, m):
            """K = I_m gives 1/sqrt(m)."""
            assert estimate_exact(identity_dictionary(m), _family()).value == pytest.approx(1 / math.sqrt(m), rel=1e-12)

        def test_exact_l2_two_copies(self, identity_dictionary):
            """Two copies of I4 under L2: 2^(1/4) / 2."""
            estimate = estimate_exact(identity_dictionary(4, p=2), _family(Family.L2))
            assert estimate.value == pytest.approx(2 ** 0.25 / 2, rel=1e-12)

    # =========================================================================
    # Branch Coverage
    # =========================================================================

    class TestBranchCoverage:
        """Shared forms across families."""

        def test_many_families_match_single_runs(self, tiny_dictionary):
            """estimate_many gives the same numbers as separate calls."""
            families = [_family(Family.L1, 0.5), _family(Family.L2, 0.5)]
            joint = estimate_many(tiny_dictionary, families, EstimateMethod.MONTE_CARLO, n_trials=1500, seed=4)
            for estimate, family in zip(joint, families):
                single = estimate_mc(tiny_dictionary, family, 1500, 4)
                assert estimate.value == single.value
                assert estimate.family is family.tag

        def test_single_trial_has_zero_stderr(self, tiny_dictionary):
            """One trial reports stderr 0."""
            assert estimate_mc(tiny_dictionary, _family(), 1, 0).stderr == 0.0

    # =========================================================================
    # Boundary Value Analysis
    # =========================================================================

    class TestBoundaryValueAnalysis:
        """Caps."""

        def test_exact_at_cap(self, identity_dictionary):
            """m equal to the cap is allowed."""
            assert estimate_exact(identity_dictionary(5), _family(), exact_cap=5).trials == 32

    # =========================================================================
    # Error Handling
    # =========================================================================

    class TestErrorHandling:
        """Capacity and parameter errors."""

        def test_exact_above_cap(self, identity_dictionary):
            """m above the cap raises CapacityError naming the cap."""
            with pytest.raises(CapacityError) as info:
                estimate_exact(identity_dictionary(6), _family(), exact_cap=5)
            assert info.value.cap == 5

        def test_cap_above_hard_limit(self, identity_dictionary):
            """exact_cap cannot exceed 24."""
            with pytest.raises(ParameterError):
                estimate_exact(identity_dictionary(2), _family(), exact_cap=25)

        @pytest.mark.parametrize("trials", [0, -3, 2.5])
        def test_bad_trials(self, identity_dictionary, trials):
            """n_trials must be a positive integer."""
            with pytest.raises(ParameterError):
                estimate_mc(identity_dictionary(2), _family(), trials, 0)

        def test_negative_threads(self, identity_dictionary):
            """threads must be nonnegative."""
            with pytest.raises(ParameterError):
                estimate_mc(identity_dictionary(2), _family(), 10, 0, threads=-1)

        def test_no_families(self, identity_dictionary):
            """At least one family is required."""
            with pytest.raises(ParameterError):
                estimate_many(identity_dictionary(2), [])

    # =========================================================================
    # Properties
    # =========================================================================

    class TestProperties:
        """Determinism and agreement."""

        @pytest.mark.parametrize("threads", [4, 8])
        def test_thread_count_does_not_change_result(self, tiny_dictionary, threads):
            """Same seed, different worker counts, identical value and stderr."""
            one = estimate_mc(tiny_dictionary, _family(), 3000, 21, threads=1)
            other = estimate_mc(tiny_dictionary, _family(), 3000, 21, threads=threads)
            assert (one.value, one.stderr) == (other.value, other.stderr)

        def test_mc_agrees_with_exact(self, tiny_dictionary):
            """Monte Carlo lies within four standard errors of enumeration."""
            exact = estimate_exact(tiny_dictionary, _family(Family.L2))
            mc = estimate_mc(tiny_dictionary, _family(Family.L2), 20000, 5)
            assert abs(mc.value - exact.value) <= 4 * mc.stderr

        @pytest.mark.slow
        @pytest.mark.parametrize("instance", range(20))
        def test_mc_agrees_with_exact_on_seeded_instances(self, instance):
            """2e5 sampled sign vectors land within four standard errors of enumeration, m <= 12."""
            rng = np.random.default_rng([2024, instance])
            dictionary = random_dictionary(rng, int(rng.integers(2, 13)), int(rng.integers(1, 6)))
            family = _family(Family.L1 if instance % 2 == 0 else Family.L2)
            exact = estimate_exact(dictionary, family)
            mc = estimate_mc(dictionary, family, 200000, instance)
            assert abs(mc.value - exact.value) <= 4 * mc.stderr + 1e-12

        def test_rank_one_mc_converges(self):
            """K = ones(2): the Monte Carlo value approaches 0.5."""
            dictionary = KernelDictionary.from_matrices([np.ones((2, 2))])
            estimate = estimate_mc(dictionary, _family(), 20000, 1)
            assert abs(estimate.value - 0.5) <= 4 * estimate.stderr

        def test_l1_never_above_l2(self, rng):
            """Simplex suprema are dominated by sphere suprema."""
            dictionary = random_dictionary(rng, 7, 4)
            l1, l2 = estimate_many(dictionary, [_family(Family.L1), _family(Family.L2)], EstimateMethod.EXACT)
            assert l1.value <= l2.value + 1e-12


class TestOracle:
    """Tests for weight_grid and brute_force_sup."""

    # =========================================================================
    # Statement Coverage
    # =========================================================================

    class TestStatementCoverage:
        """Grid construction."""

        def test_simplex_grid(self):
            """Compositions of 4 into 2 parts, scaled to the simplex."""
            grid = weight_grid(2, 0.25, Family.L1)
            assert grid.shape == (5, 2)
            np.testing.assert_allclose(grid.sum(axis=1), 1.0)

        def test_sphere_grids(self):
            """L2 rows have unit norm; L2Signed adds sign patterns."""
            l2 = weight_grid(2, 0.25, Family.L2)
            signed = weight_grid(2, 0.25, Family.L2_SIGNED)
            np.testing.assert_allclose(np.linalg.norm(l2, axis=1), 1.0)
            assert np.any(signed < 0)
            assert signed.shape[0] > l2.shape[0]

    # =========================================================================
    # Branch Coverage
    # =========================================================================

    class TestBranchCoverage:
        """Achiever and degenerate outcomes."""

        @pytest.mark.parametrize("tag", list(Family))
        def test_single_kernel_equals_closed_form(self, tag):
            """p=1 has no weight freedom."""
            dictionary = KernelDictionary.from_matrices([np.array([[2.0, 0.5], [0.5, 1.0]])])
            sigma = np.array([1.0, -1.0])
            oracle = brute_force_sup(dictionary, sigma, _family(tag), 0.1)
            assert oracle.grid_max == pytest.approx(sup_closed_form(dictionary, sigma, _family(tag)), rel=1e-12)
            assert oracle.achiever_check == pytest.approx(oracle.grid_max, rel=1e-9)
            assert oracle.ball_residual < 1e-9

        def test_degenerate_flag(self):
            """sigma in the null space of every kernel reports achiever 0."""
            dictionary = KernelDictionary.from_matrices([np.ones((2, 2)), np.ones((2, 2))])
            oracle = brute_force_sup(dictionary, np.array([1.0, -1.0]), _family(), 0.25)
            assert oracle.degenerate
            assert oracle.achiever_check == 0.0

    # =========================================================================
    # Properties
    # =========================================================================

    class TestProperties:
        """Grid maxima approach the closed form from below."""

        def test_grid_never_above_closed_form(self, rng):
            """Random instances: grid max <= closed form + 1e-9."""
            for _ in range(15):
                dictionary = random_dictionary(rng, int(rng.integers(1, 7)), int(rng.integers(1, 4)))
                sigma = rng.choice((-1.0, 1.0), size=dictionary.m)
                for tag in Family:
                    oracle = brute_force_sup(dictionary, sigma, _family(tag), 0.05)
                    assert oracle.grid_max <= sup_closed_form(dictionary, sigma, _family(tag)) + 1e-9

        def test_refinement_converges(self, rng):
            """Refining 0.2 -> 0.01 never lowers the max and lands within 2%."""
            dictionary = random_dictionary(rng, 5, 2)
            sigma = np.array([1.0, -1.0, 1.0, 1.0, -1.0])
            closed = sup_closed_form(dictionary, sigma, _family(Family.L2))
            coarse = brute_force_sup(dictionary, sigma, _family(Family.L2), 0.2)
            fine = brute_force_sup(dictionary, sigma, _family(Family.L2), 0.01)
            assert fine.grid_max >= coarse.grid_max - 1e-12
            assert fine.grid_max >= 0.98 * closed

    # =========================================================================
    # Error Handling
    # =========================================================================

    class TestErrorHandling:
        """Oracle limits."""

        def test_too_many_kernels(self, identity_dictionary):
            """The oracle stops at p = 3."""
            with pytest.raises(ParameterError):
                brute_force_sup(identity_dictionary(2, p=4), np.ones(2), _family(), 0.1)

        def test_coarse_step(self, identity_dictionary):
            """grid_step must be at most 0.25."""
            with pytest.raises(ParameterError):
                brute_force_sup(identity_dictionary(2), np.ones(2), _family(), 0.5)
