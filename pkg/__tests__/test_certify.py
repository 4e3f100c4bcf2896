"""
Unit tests for kernbound.certify module.

Tests cover:
- Statement coverage for certificate assembly
- Branch coverage for every bound choice, including the ceiling fallback
- Boundary value analysis (rho at the admissible maximum)
- Error handling verification (membership, unlabelled samples, foreign models)
"""
import math

import numpy as np
import pytest

from kernbound.certify import assemble, certify, check_membership, confidence_term
from kernbound.datasets import make_two_blobs
from kernbound.domain import KernelSpec, MarginConfig, Sample
from kernbound.errors import InputError, MembershipError, ParameterError
from kernbound.kernels import build_dictionary
from kernbound.learner import Model, classification_error, predict_samples, train
from kernbound.options import BoundChoice, Family, TrainOptions


@pytest.fixture
def two_points():
    return Sample.from_arrays(np.array([[1.0], [-1.0]]), np.array([1, -1]))


@pytest.fixture
def two_point_setup(two_points):
    dictionary = build_dictionary(two_points, [KernelSpec.linear("lin")])
    return two_points, dictionary, train(two_points, dictionary)


class TestAssemble:
    """Tests for assemble and confidence_term."""

    # =========================================================================
    # Statement Coverage
    # =========================================================================

    class TestStatementCoverage:
        """Certificate arithmetic."""

        def test_worked_total(self):
            """0.1 + 2 * 0.1 + 2 sqrt(ln(200) / 200), about 0.625525."""
            certificate = assemble(0.1, 0.1, MarginConfig(rho=1.0, delta=0.01), 100, 1, Family.L1, "trace(r=2)")
            expected = 0.1 + 0.2 + 2 * math.sqrt(math.log(200) / 200)
            assert certificate.total == pytest.approx(expected, rel=1e-12)
            assert certificate.total == pytest.approx(0.625525, abs=1e-6)
            assert certificate.complexity_term == pytest.approx(0.2)

        def test_serialized_family(self):
            """The family serializes as its name."""
            certificate = assemble(0.0, 0.0, MarginConfig(rho=1.0, delta=0.5), 10, 1, Family.L2, "ceiling")
            assert certificate.model_dump(mode="json")["family"] == "L2"

    # =========================================================================
    # Error Handling
    # =========================================================================

    class TestErrorHandling:
        """Confidence parameters."""

        @pytest.mark.parametrize("delta", [0.0, 1.0, -0.1])
        def test_bad_delta(self, delta):
            """delta lies strictly inside (0, 1)."""
            with pytest.raises(ParameterError):
                confidence_term(delta, 10)

        def test_bad_m(self):
            """m must be positive."""
            with pytest.raises(ParameterError):
                confidence_term(0.05, 0)


class TestCertify:
    """Tests for certify and check_membership."""

    # =========================================================================
    # Statement Coverage
    # =========================================================================

    class TestStatementCoverage:
        """Trace bound on the two-point model."""

        def test_trace_certificate(self, two_point_setup):
            """Trace bound sqrt(2 * 2) / (2 * 0.5) = 2, no margin errors."""
            sample, dictionary, model = two_point_setup
            certificate = certify(model, sample, dictionary, MarginConfig(rho=0.5, delta=0.05), BoundChoice.TRACE)
            assert certificate.margin_loss == 0.0
            assert certificate.rademacher_value == pytest.approx(2.0)
            assert certificate.bound_choice == "trace(r=2)"
            assert certificate.provenance["rho_max"] == pytest.approx(1.0)
            assert certificate.provenance["r"] == 2

    # =========================================================================
    # Branch Coverage
    # =========================================================================

    class TestBranchCoverage:
        """Bound choices."""

        def test_ceiling_falls_back_for_one_kernel(self, two_point_setup):
            """p = 1 has no L1 ceiling bound, so the trace bound at r = 2 is used."""
            sample, dictionary, model = two_point_setup
            certificate = certify(model, sample, dictionary, MarginConfig(rho=0.5, delta=0.05), "ceiling")
            assert certificate.bound_choice == "trace(r=2)"
            assert "fallback" in certificate.provenance

        def test_ceiling_with_several_kernels(self, tiny_sample, tiny_dictionary):
            """p = 3 uses the ceiling bound itself."""
            model = train(tiny_sample, tiny_dictionary, Family.L1, TrainOptions(max_outer=5))
            rho = check_membership(model, tiny_dictionary, 1e-6)
            certificate = certify(model, tiny_sample, tiny_dictionary, MarginConfig(rho=rho, delta=0.05))
            assert certificate.bound_choice == "ceiling"

        def test_exact_and_mc_agree(self, two_point_setup):
            """Empirical estimates at m = 2 agree within four standard errors."""
            sample, dictionary, model = two_point_setup
            margin = MarginConfig(rho=0.5, delta=0.05)
            exact = certify(model, sample, dictionary, margin, "exact")
            mc = certify(model, sample, dictionary, margin, "mc", n_trials=4000, seed=2)
            assert exact.bound_choice == "empiricalExact"
            assert mc.provenance["trials"] == 4000
            assert abs(exact.rademacher_value - mc.rademacher_value) <= 4 * mc.provenance["stderr"] + 1e-12

        def test_empirical_below_trace(self, two_point_setup):
            """The exact complexity never exceeds the trace bound."""
            sample, dictionary, model = two_point_setup
            margin = MarginConfig(rho=0.5, delta=0.05)
            exact = certify(model, sample, dictionary, margin, BoundChoice.EMPIRICAL_EXACT)
            trace = certify(model, sample, dictionary, margin, BoundChoice.TRACE)
            assert exact.total <= trace.total

        def test_blobs_end_to_end(self):
            """Trained on 60 blob points at rho_max, the certificate covers the error on 200 fresh points."""
            train_sample = make_two_blobs(60, seed=42)
            test_sample = make_two_blobs(200, seed=1042)
            specs = [KernelSpec.linear("lin"), KernelSpec.gaussian(0.5, name="rbf"), KernelSpec.polynomial(2, 1.0)]
            dictionary = build_dictionary(train_sample, specs)
            model = train(train_sample, dictionary, Family.L1)
            rho = check_membership(model, dictionary, 1e-9)
            certificate = certify(model, train_sample, dictionary, MarginConfig(rho=rho, delta=0.05))

            expected = certificate.margin_loss + certificate.complexity_term + certificate.confidence_term
            assert certificate.total == pytest.approx(expected, abs=1e-12)
            assert certificate.confidence_term == pytest.approx(2 * math.sqrt(math.log(40) / 120), abs=1e-12)
            test_error = classification_error(predict_samples(model, train_sample, test_sample), test_sample.y)
            assert test_error <= certificate.total

        @pytest.mark.slow
        def test_blobs_certificate_covers_test_error_across_seeds(self):
            """Over 20 seeds the test error stays within the certificate in at least 19."""
            specs = [KernelSpec.linear("lin"), KernelSpec.gaussian(0.5, name="rbf"), KernelSpec.polynomial(2, 1.0)]
            covered = 0
            for seed in range(42, 62):
                train_sample = make_two_blobs(60, seed=seed)
                test_sample = make_two_blobs(200, seed=seed + 1000)
                dictionary = build_dictionary(train_sample, specs)
                model = train(train_sample, dictionary, Family.L1)
                rho = check_membership(model, dictionary, 1e-9)
                certificate = certify(model, train_sample, dictionary, MarginConfig(rho=rho, delta=0.05))
                test_error = classification_error(predict_samples(model, train_sample, test_sample), test_sample.y)
                covered += test_error <= certificate.total
            assert covered >= 19

    # =========================================================================
    # Boundary Value Analysis
    # =========================================================================

    class TestBoundaryValueAnalysis:
        """Admissible maximum."""

        def test_rho_at_maximum(self, two_point_setup):
            """rho equal to rho_max is accepted; every point then sits on the margin."""
            sample, dictionary, model = two_point_setup
            certificate = certify(model, sample, dictionary, MarginConfig(rho=1.0, delta=0.05), "trace")
            assert certificate.margin_loss == 1.0

    # =========================================================================
    # Error Handling
    # =========================================================================

    class TestErrorHandling:
        """Hypotheses outside the set."""

        def test_rho_too_large(self, two_point_setup):
            """MembershipError carries rho_max."""
            sample, dictionary, model = two_point_setup
            with pytest.raises(MembershipError) as info:
                certify(model, sample, dictionary, MarginConfig(rho=1.5, delta=0.05))
            assert info.value.rho_max == pytest.approx(1.0)

        def test_unlabelled_sample(self, two_point_setup):
            """Labels are required for the margin loss."""
            _, dictionary, model = two_point_setup
            unlabelled = Sample.from_arrays(np.array([[1.0], [-1.0]]))
            with pytest.raises(InputError):
                certify(model, unlabelled, dictionary, MarginConfig(rho=0.5, delta=0.05))

        def test_reordered_dictionary(self):
            """A model trained on [lin, rbf] does not certify against [rbf, lin]."""
            sample = make_two_blobs(20, seed=3)
            specs = [KernelSpec.linear("lin"), KernelSpec.gaussian(0.5, name="rbf")]
            model = train(sample, build_dictionary(sample, specs), Family.L1, TrainOptions(max_outer=5))
            reordered = build_dictionary(sample, specs[::-1])
            with pytest.raises(InputError, match="kernel list"):
                certify(model, sample, reordered, MarginConfig(rho=1e-6, delta=0.05))

        def test_other_sample_of_same_size(self):
            """A model trained on one sample does not certify another sample of the same size."""
            specs = [KernelSpec.linear("lin"), KernelSpec.gaussian(0.5, name="rbf")]
            first = make_two_blobs(20, seed=3)
            second = make_two_blobs(20, seed=4)
            model = train(first, build_dictionary(first, specs), Family.L1, TrainOptions(max_outer=5))
            with pytest.raises(InputError, match="different sample"):
                certify(model, second, build_dictionary(second, specs), MarginConfig(rho=1e-6, delta=0.05))

        def test_model_without_provenance(self, two_point_setup):
            """Hand-built models carry no specs or sample hash and skip the provenance check."""
            sample, dictionary, _ = two_point_setup
            model = Model(family=Family.L1, mu=[1.0], alpha=[0.5, -0.5])
            certificate = certify(model, sample, dictionary, MarginConfig(rho=0.5, delta=0.05), "trace")
            assert certificate.margin_loss == 0.0

    # =========================================================================
    # Properties
    # =========================================================================

    class TestProperties:
        """Dependence on the sample size."""

        @pytest.mark.parametrize("choice", ["trace", "ceiling"])
        def test_total_strictly_decreases_in_m(self, choice):
            """With the same loss, every closed-form total shrinks as m grows."""
            totals = []
            for m in (4, 8, 16, 32, 64):
                sample = Sample.from_arrays(np.eye(m), np.where(np.arange(m) % 2 == 0, 1, -1))
                dictionary = build_dictionary(sample, [KernelSpec.linear("lin"), KernelSpec.gaussian(0.5, name="rbf")])
                model = Model(family=Family.L1, mu=[0.5, 0.5], alpha=[0.0] * m)
                certificate = certify(model, sample, dictionary, MarginConfig(rho=0.5, delta=0.05), choice)
                assert certificate.margin_loss == 1.0
                totals.append(certificate.total)
            assert all(later < earlier for earlier, later in zip(totals, totals[1:]))
