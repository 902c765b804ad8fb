"""
Tests for Poincare constants, converse weights and stability checks.
"""

import math

import numpy as np
import pytest

from core.exceptions import NormalizationError, SpectralError
from galerkin import build_basis
from measures import catalog
from quadrature import weighted_nodes
from spectral import (
    condition_c_estimate, converse_weight_bound, first_eigenvalue, holder_product, poincare_constant_1d,
    rayleigh_report, rayleigh_variational_bound, resolve_weight, stability_check_poincare,
    stability_check_weighted, weighted_second_moment
)

UNIFORM_CP = 12.0 / math.pi ** 2


class TestPoincareConstant1D:
    """Test cases for the finite-difference estimate."""

    def test_gaussian(self):
        """Test Cp = 1 for the standard Gaussian."""
        report = poincare_constant_1d(catalog("gaussian"))
        assert report.cp_estimate == pytest.approx(1.0, rel=1e-3)
        assert report.method == "finite-difference"
        assert report.convergence_gap < 1e-4

    def test_uniform(self):
        """Test Cp = 12 / pi^2 for the standardized uniform law."""
        report = poincare_constant_1d(catalog("uniform"))
        assert report.cp_estimate == pytest.approx(UNIFORM_CP, rel=1e-3)
        assert report.interval == pytest.approx([-math.sqrt(3.0), math.sqrt(3.0)])

    def test_laplace(self):
        """Test Cp = 2 for the standardized Laplace law."""
        report = poincare_constant_1d(catalog("laplace"))
        assert report.cp_estimate == pytest.approx(2.0, abs=1e-2)

    def test_two_dimensional_rejected(self):
        """Test that the estimate is one-dimensional."""
        with pytest.raises(SpectralError):
            poincare_constant_1d(catalog("gaussian", {"dim": 2}))

    def test_interior_gap_rejected(self):
        """Test a density that vanishes inside its support."""
        x = np.linspace(-1.0, 1.0, 101)
        with pytest.raises(SpectralError):
            first_eigenvalue(x, lambda t: np.where(np.abs(t) < 0.2, 0.0, 1.0), "split")

    def test_refinement_limit(self):
        """Test the failure when refinement cannot reach the gap."""
        from config.settings import SpectralSettings
        settings = SpectralSettings(initial_grid=64, max_grid=100, convergence_gap=1e-12)
        with pytest.raises(SpectralError):
            poincare_constant_1d(catalog("laplace"), settings=settings)

    @pytest.mark.parametrize("a", [0.5, 2.0])
    def test_scaling(self, a):
        """Test Cp(aX) = a^2 Cp(X)."""
        base = poincare_constant_1d(catalog("laplace")).cp_estimate
        scaled = poincare_constant_1d(catalog("laplace", {"b": a / math.sqrt(2.0)})).cp_estimate
        assert scaled == pytest.approx(a * a * base, rel=1e-6)

    def test_translation_invariance(self):
        """Test that shifting the law leaves Cp unchanged."""
        root3 = math.sqrt(3.0)
        base = poincare_constant_1d(catalog("uniform")).cp_estimate
        shifted = poincare_constant_1d(catalog("uniform", {"a": 2.0 - root3, "b": 2.0 + root3})).cp_estimate
        assert shifted == pytest.approx(base, rel=1e-6)
        moved = poincare_constant_1d(catalog("gaussian", {"mean": [3.0]})).cp_estimate
        assert moved == pytest.approx(poincare_constant_1d(catalog("gaussian")).cp_estimate, rel=1e-6)


class TestRayleighBound:
    """Test cases for the variational lower bound."""

    def test_gaussian_linear_functions(self):
        """Test that linear functions already attain Cp for the Gaussian."""
        spec = catalog("gaussian")
        assert rayleigh_variational_bound(spec, build_basis(spec, 3)) == pytest.approx(1.0, rel=1e-8)

    def test_uniform_monotone_lower_bounds(self):
        """Test that the bounds increase with the degree and stay below Cp."""
        spec = catalog("uniform")
        nodes = weighted_nodes(spec)
        bounds = [rayleigh_variational_bound(spec, build_basis(spec, n, nodes=nodes), nodes=nodes)
                  for n in (1, 3, 5, 7)]

        assert bounds[0] == pytest.approx(1.0, rel=1e-8)
        assert all(b >= a - 1e-12 for a, b in zip(bounds, bounds[1:]))
        assert all(b <= UNIFORM_CP * (1.0 + 1e-8) for b in bounds)
        assert bounds[-1] == pytest.approx(UNIFORM_CP, rel=1e-3)

    def test_rayleigh_report(self):
        """Test the report wrapper."""
        spec = catalog("laplace")
        report = rayleigh_report(spec, build_basis(spec, 2))
        assert report.method == "rayleigh-ritz"
        assert report.basis_degree == 2
        assert report.cp_estimate <= 2.0


class TestConverseWeight:
    """Test cases for converse weighted inequalities."""

    def test_unit_weight_second_moment(self):
        """Test that the weight 1 gives integral |x|^2 = d."""
        spec = catalog("gaussian")
        assert weighted_second_moment(spec, resolve_weight("1", spec)) == pytest.approx(1.0, rel=1e-10)

    def test_gaussian_unit_weight_witness(self):
        """Test that the Gaussian with weight 1 does not refute the converse."""
        spec = catalog("gaussian")
        bound, witness = converse_weight_bound(spec, "1", build_basis(spec, 3))
        assert bound == pytest.approx(1.0, rel=1e-10)
        assert witness == pytest.approx(1.0, rel=1e-8)

    def test_uniform_unit_weight_refutes(self):
        """Test a witness above 1 for the uniform law with weight 1."""
        spec = catalog("uniform")
        _, witness = converse_weight_bound(spec, "1", build_basis(spec, 5))
        assert witness > 1.0

    def test_missing_weight(self):
        """Test that a weight must come from somewhere."""
        with pytest.raises(ValueError):
            resolve_weight(None, catalog("gaussian"))

    def test_measure_weight_is_used(self):
        """Test falling back to the weight declared by the measure."""
        spec = catalog("expression", {"log_density": "-x1**2/2", "weight": "1 + x1**2"})
        omega = resolve_weight(None, spec)
        np.testing.assert_allclose(omega(np.array([[1.0]])), [2.0])

    def test_condition_c(self):
        """Test the condition (c) ratio against Cp E|x|^2."""
        spec = catalog("uniform")
        value = condition_c_estimate(spec, build_basis(spec, 4))
        assert 1.0 - 1e-8 <= value <= UNIFORM_CP


class TestStability:
    """Test cases for the stability records."""

    def test_poincare_stability_holds(self):
        """Test the uniform law against its W2 distance to the Gaussian."""
        record = stability_check_poincare(catalog("uniform"), UNIFORM_CP, w2_to_gamma=0.1)
        assert record.label == "poincare-stability"
        assert record.direction == "lower"
        assert record.passed

    def test_poincare_stability_fails_for_large_distance(self):
        """Test a violated stability inequality."""
        record = stability_check_poincare(catalog("uniform"), UNIFORM_CP, w2_to_gamma=1.0)
        assert not record.passed

    def test_unnormalized_measure(self):
        """Test that the stability bound needs E|x|^2 = d."""
        with pytest.raises(NormalizationError):
            stability_check_poincare(catalog("gaussian", {"variance": 2.0}), 2.0, 0.0)

    def test_weighted_stability(self):
        """Test the weighted form with the unit weight."""
        record = stability_check_weighted(catalog("laplace"), "1", w2_to_gamma=0.0)
        assert record.label == "weighted-stability"
        assert record.measured == pytest.approx(1.0, rel=1e-8)
        assert record.passed

    def test_holder_p_one(self):
        """Test the Holder product with p = 1 and the unit weight."""
        spec = catalog("laplace")
        assert holder_product(spec, resolve_weight("1", spec), 1.0) == pytest.approx(1.0, rel=1e-8)
        record = stability_check_weighted(spec, "1", w2_to_gamma=0.0, p=1.0)
        assert record.label == "holder-stability"
        assert record.passed

    def test_holder_exponent_range(self):
        """Test rejection of p < 1."""
        spec = catalog("laplace")
        with pytest.raises(ValueError):
            holder_product(spec, resolve_weight("1", spec), 0.5)
