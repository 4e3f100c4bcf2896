"""
Unit tests for kernbound.projections module.

Tests cover:
- Statement coverage for simplex and sphere projections
- Branch coverage for already-feasible and degenerate inputs
- Error handling verification
"""
import numpy as np
import pytest

from kernbound.errors import InputError
from kernbound.options import Family
from kernbound.projections import project, project_simplex, project_sphere


class TestProjectSimplex:
    """Tests for project_simplex."""

    # =========================================================================
    # Statement Coverage
    # =========================================================================

    class TestStatementCoverage:
        """Worked projections."""

        @pytest.mark.parametrize("v, expected", [
            ([2.0, 0.0], [1.0, 0.0]),
            ([1.0, 1.0, 1.0], [1 / 3, 1 / 3, 1 / 3]),
            ([-1.0, 3.0], [0.0, 1.0]),
            ([0.6, 0.6], [0.5, 0.5]),
        ])
        def test_known_points(self, v, expected):
            """Closest simplex point."""
            np.testing.assert_allclose(project_simplex(np.array(v)), expected, atol=1e-12)

    # =========================================================================
    # Branch Coverage
    # =========================================================================

    class TestBranchCoverage:
        """Feasible input and other radii."""

        def test_feasible_input_unchanged(self):
            """Points already on the simplex are returned as a copy."""
            v = np.array([0.25, 0.75])
            out = project_simplex(v)
            np.testing.assert_array_equal(out, v)
            assert out is not v

        def test_radius(self):
            """Entries sum to the requested radius."""
            assert project_simplex(np.array([3.0, 1.0, -2.0]), radius=2.0).sum() == pytest.approx(2.0)

    # =========================================================================
    # Properties
    # =========================================================================

    class TestProperties:
        """Output is feasible and idempotent."""

        def test_random_inputs(self, rng):
            """Nonnegative, sums to 1, and projecting twice changes nothing."""
            for _ in range(50):
                out = project_simplex(rng.normal(scale=3.0, size=int(rng.integers(1, 9))))
                assert np.all(out >= 0.0)
                assert out.sum() == pytest.approx(1.0, abs=1e-12)
                np.testing.assert_allclose(project_simplex(out), out, atol=1e-12)

    # =========================================================================
    # Error Handling
    # =========================================================================

    class TestErrorHandling:
        """Malformed vectors."""

        @pytest.mark.parametrize("v", [np.array([]), np.ones((2, 2)), np.array([1.0, np.nan])])
        def test_rejected(self, v):
            """Empty, matrix and non-finite inputs fail."""
            with pytest.raises(InputError):
                project_simplex(v)


class TestProjectSphere:
    """Tests for project_sphere and project."""

    # =========================================================================
    # Statement Coverage
    # =========================================================================

    class TestStatementCoverage:
        """Normalisation."""

        def test_three_four(self):
            """(3, 4) maps to (0.6, 0.8)."""
            np.testing.assert_allclose(project_sphere(np.array([3.0, 4.0])), [0.6, 0.8])

        def test_negative_entries_clamped(self):
            """Negative entries become zero before normalising."""
            np.testing.assert_allclose(project_sphere(np.array([-1.0, 2.0])), [0.0, 1.0])

    # =========================================================================
    # Boundary Value Analysis
    # =========================================================================

    class TestBoundaryValueAnalysis:
        """Nothing positive."""

        def test_all_nonpositive_gives_uniform(self):
            """The zero vector after clamping maps to 1/sqrt(p)."""
            np.testing.assert_allclose(project_sphere(np.array([-1.0, -2.0, 0.0, -3.0])), np.full(4, 0.5))

    # =========================================================================
    # Branch Coverage
    # =========================================================================

    class TestBranchCoverage:
        """Dispatch by family."""

        def test_dispatch(self):
            """L1 goes to the simplex and L2 to the sphere."""
            v = np.array([3.0, 4.0])
            np.testing.assert_allclose(project(v, Family.L1), [0.0, 1.0])
            np.testing.assert_allclose(project(v, Family.L2), [0.6, 0.8])

    # =========================================================================
    # Error Handling
    # =========================================================================

    class TestErrorHandling:
        """Unsupported family."""

        def test_signed_family(self):
            """L2Signed weights are never projected."""
            with pytest.raises(InputError):
                project(np.array([1.0]), Family.L2_SIGNED)
