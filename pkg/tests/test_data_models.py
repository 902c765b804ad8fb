"""
Unit tests for core data models.

Tests record construction, pass evaluation, ordering and report validation.
"""

import math

import pytest
from hypothesis import given, strategies as st
from pydantic import ValidationError

from core.data_models import (
    BoundDirection, DiscrepancyReport, ExperimentRecord, MomentReport,
    SpectralMethod, SpectralReport, inequality_holds
)


class TestExperimentRecord:
    """Test cases for ExperimentRecord."""

    def test_check_upper_bound_passes(self):
        """Test an upper-bound record that holds."""
        record = ExperimentRecord.check("w2-rate", 4, measured=0.2, bound=0.25)

        assert record.passed
        assert record.direction == "upper"
        assert record.measured == 0.2
        assert record.bound == 0.25
        assert not record.is_failure()

    def test_check_upper_bound_fails(self):
        """Test an upper-bound record that is violated."""
        record = ExperimentRecord.check("w2-rate", 4, measured=0.3, bound=0.25)

        assert not record.passed
        assert record.is_failure()

    def test_check_lower_bound(self):
        """Test a lower-bound record."""
        record = ExperimentRecord.check("skewness", 1, measured=0.5, bound=0.44,
                                        direction=BoundDirection.LOWER)
        assert record.passed
        assert record.direction == "lower"

        record = ExperimentRecord.check("skewness", 1, measured=0.4, bound=0.44,
                                        direction=BoundDirection.LOWER)
        assert not record.passed

    def test_informational_record_never_fails(self):
        """Test that informational records do not count as failures."""
        record = ExperimentRecord.check("rio-asymptotic", 8, measured=2.0, bound=1.0, informational=True)

        assert not record.passed
        assert not record.is_failure()

    def test_tolerance_is_relative_to_bound(self):
        """Test the relative slack of the pass flag."""
        assert ExperimentRecord.check("x", 1, measured=1.0 + 5e-7, bound=1.0).passed
        assert not ExperimentRecord.check("x", 1, measured=1.0 + 5e-6, bound=1.0).passed
        assert ExperimentRecord.check("x", 1, measured=1.0 + 5e-6, bound=1.0, tolerance=1e-5).passed

    def test_non_finite_values_fail(self):
        """Test that NaN or infinite values never pass."""
        assert not ExperimentRecord.check("x", 1, measured=math.nan, bound=1.0).passed
        assert not ExperimentRecord.check("x", 1, measured=0.0, bound=math.inf).passed

    def test_invalid_fields_rejected(self):
        """Test field validation."""
        with pytest.raises(ValidationError):
            ExperimentRecord(label="", n=1, measured=0.0, bound=1.0, passed=True)
        with pytest.raises(ValidationError):
            ExperimentRecord(label="x", n=-1, measured=0.0, bound=1.0, passed=True)
        with pytest.raises(ValidationError):
            ExperimentRecord(label="x", n=1, measured=0.0, bound=1.0, passed=True, tolerance_used=-1.0)

    def test_sort_key_orders_canonically(self):
        """Test ordering by (label, n, m, seed, measure)."""
        records = [
            ExperimentRecord.check("monotonicity", 4, 0.1, 0.2, m=2),
            ExperimentRecord.check("monotonicity", 4, 0.1, 0.2, m=1),
            ExperimentRecord.check("monotonicity", 2, 0.1, 0.2, m=1),
            ExperimentRecord.check("entropy", 8, 0.1, 0.2),
        ]
        ordered = sorted(records, key=ExperimentRecord.sort_key)

        assert [(r.label, r.n, r.m) for r in ordered] == [
            ("entropy", 8, None), ("monotonicity", 2, 1), ("monotonicity", 4, 1), ("monotonicity", 4, 2)
        ]

    def test_serialization(self):
        """Test record serialization."""
        record = ExperimentRecord.check("fisher", 4, 0.001, 0.027, measure="u", seed=7)
        data = record.model_dump()

        assert data["label"] == "fisher"
        assert data["direction"] == "upper"
        assert data["seed"] == 7
        assert ExperimentRecord(**data) == record


class TestInequalityHolds:
    """Property tests for inequality_holds."""

    @given(st.floats(min_value=-1e6, max_value=1e6), st.floats(min_value=0.0, max_value=1e6))
    def test_upper_holds_below_bound(self, bound, gap):
        """Any value at or below the bound passes."""
        assert inequality_holds(bound - gap, bound)

    @given(st.floats(min_value=-1e6, max_value=1e6), st.floats(min_value=0.0, max_value=1e6))
    def test_lower_holds_above_bound(self, bound, gap):
        """Any value at or above the bound passes a lower bound."""
        assert inequality_holds(bound + gap, bound, BoundDirection.LOWER)

    @given(st.floats(min_value=1.0, max_value=1e6))
    def test_upper_fails_well_above_bound(self, bound):
        """Values far above the bound fail."""
        assert not inequality_holds(bound * 1.01, bound)


class TestDiscrepancyReport:
    """Test cases for DiscrepancyReport."""

    def test_round_off_negative_is_clamped(self):
        """Test clamping of tiny negative discrepancies."""
        report = DiscrepancyReport(s_squared=-1e-12, second_moment_tau=1.0)
        assert report.s_squared == 0.0

    def test_negative_discrepancy_rejected(self):
        """Test rejection of a genuinely negative discrepancy."""
        with pytest.raises(ValidationError) as exc_info:
            DiscrepancyReport(s_squared=-0.1, second_moment_tau=1.0)
        assert "nonnegative" in str(exc_info.value)

    def test_bound_holds(self):
        """Test the bound comparison."""
        assert DiscrepancyReport(s_squared=0.2, second_moment_tau=1.2, bound_value=0.216).bound_holds()
        assert not DiscrepancyReport(s_squared=0.3, second_moment_tau=1.2, bound_value=0.216).bound_holds()
        assert DiscrepancyReport(s_squared=5.0, second_moment_tau=1.0).bound_holds()


class TestSpectralReport:
    """Test cases for SpectralReport."""

    def test_valid_report(self):
        """Test a finite-difference report."""
        report = SpectralReport(cp_estimate=1.0, lambda1=1.0, method=SpectralMethod.FINITE_DIFFERENCE,
                                grid_size=2001)
        assert report.method == "finite-difference"

    def test_nonpositive_constant_rejected(self):
        """Test that a Poincare constant must be positive."""
        with pytest.raises(ValidationError):
            SpectralReport(cp_estimate=0.0, lambda1=1.0, method=SpectralMethod.RAYLEIGH_RITZ)


class TestMomentReport:
    """Test cases for MomentReport."""

    def test_isotropic_report(self):
        """Test an isotropic two-dimensional report."""
        report = MomentReport(mean=[0.0, 0.0], covariance=[[1.0, 0.0], [0.0, 1.0]],
                              second_moment=2.0, third_marginal=[0.0, 0.0])
        assert report.dim == 2
        assert report.is_isotropic()

    def test_asymmetric_covariance_rejected(self):
        """Test rejection of a non-symmetric covariance."""
        with pytest.raises(ValidationError) as exc_info:
            MomentReport(mean=[0.0, 0.0], covariance=[[1.0, 0.5], [0.0, 1.0]],
                         second_moment=2.0, third_marginal=[0.0, 0.0])
        assert "symmetric" in str(exc_info.value)

    def test_indefinite_covariance_rejected(self):
        """Test rejection of a covariance with a negative eigenvalue."""
        with pytest.raises(ValidationError):
            MomentReport(mean=[0.0, 0.0], covariance=[[1.0, 2.0], [2.0, 1.0]],
                         second_moment=2.0, third_marginal=[0.0, 0.0])

    def test_shape_mismatch_rejected(self):
        """Test rejection of a covariance of the wrong shape."""
        with pytest.raises(ValidationError):
            MomentReport(mean=[0.0], covariance=[[1.0, 0.0], [0.0, 1.0]],
                         second_moment=1.0, third_marginal=[0.0])
