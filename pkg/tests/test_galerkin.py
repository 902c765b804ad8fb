"""
Tests for the Galerkin gradient-form Stein kernel.
"""

import json

import numpy as np
import pytest

from config.settings import GalerkinSettings
from core.data_models import ReferenceMode
from core.exceptions import CenteringError, IllConditionedBasisError, MomentBudgetError
from galerkin import (
    GalerkinSolution, assemble, build_basis, discrepancy_estimate, kernel_field, multi_indices,
    run_degrees, solve
)
from measures import catalog


class TestBasis:
    """Test cases for the polynomial basis."""

    def test_multi_indices_are_graded(self):
        """Test ordering by total degree."""
        indices = multi_indices(2, 2)
        assert indices == [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_basis_is_orthonormal(self):
        """Test that the basis is mean-zero and orthonormal under the measure."""
        from quadrature import weighted_nodes
        spec = catalog("laplace")
        nodes = weighted_nodes(spec)
        basis = build_basis(spec, 4, nodes=nodes)
        psi = basis.values(nodes.points)

        np.testing.assert_allclose(nodes.integrate(psi), 0.0, atol=1e-10)
        np.testing.assert_allclose(psi.T @ (psi * nodes.weights[:, None]), np.eye(basis.size), atol=1e-8)

    def test_degree_must_be_positive(self):
        """Test rejection of degree zero."""
        with pytest.raises(ValueError):
            build_basis(catalog("gaussian"), 0)

    def test_moment_budget_limits_degree(self):
        """Test that heavy tails cap the basis degree."""
        spec = catalog("generalized-cauchy", {"beta": 3.0})
        with pytest.raises(MomentBudgetError):
            build_basis(spec, 3)

    def test_ill_conditioned_basis(self):
        """Test the Gram condition limit on a very high degree."""
        with pytest.raises(IllConditionedBasisError):
            build_basis(catalog("uniform"), 40)


class TestGaussianReference:
    """Test cases for the Gaussian-reference weak problem."""

    @pytest.mark.parametrize("variance,expected", [(0.25, 0.5625), (4.0, 9.0)])
    def test_scaled_gaussian_discrepancy(self, variance, expected):
        """Test S^2 = (variance - 1)^2 for a scaled Gaussian."""
        results = run_degrees(catalog("gaussian", {"variance": variance}), [1, 2])
        for result in results:
            assert result.report.s_squared == pytest.approx(expected, rel=1e-8, abs=1e-10)
            assert result.report.bound_holds()

    def test_gaussian_fixed_point(self):
        """Test that the standard Gaussian has zero discrepancy at every degree."""
        for result in run_degrees(catalog("gaussian"), [1, 2, 3]):
            assert result.report.s_squared < 1e-8
            assert result.report.residual_max < 1e-8

    def test_uniform_recovers_closed_form(self):
        """Test that degree 3 reproduces the uniform kernel exactly."""
        results = run_degrees(catalog("uniform"), [1, 2, 3, 4])
        by_degree = {r.degree: r for r in results}

        assert by_degree[3].report.s_squared == pytest.approx(0.2, abs=1e-8)
        assert by_degree[4].report.s_squared == pytest.approx(0.2, abs=1e-8)
        tau = kernel_field(by_degree[3].solution)
        x = np.linspace(-1.5, 1.5, 7)
        np.testing.assert_allclose(tau.matrix(x)[:, 0, 0], (3.0 - x ** 2) / 2.0, atol=1e-8)

    def test_energy_is_monotone(self):
        """Test that the energy does not decrease with the degree."""
        results = run_degrees(catalog("laplace"), [1, 2, 3, 4, 5])
        energies = [r.solution.energy for r in results]
        assert all(b >= a - 1e-10 for a, b in zip(energies, energies[1:]))
        discrepancies = [r.report.s_squared for r in results]
        assert all(s <= 0.25 + 1e-6 for s in discrepancies)

    def test_in_span_residual(self):
        """Test the solution against its own test fields."""
        for result in run_degrees(catalog("centered-exponential"), [1, 2, 3]):
            assert result.report.residual_max < 1e-8
        assert result.report.s_squared == pytest.approx(1.0, rel=1e-8)

    def test_product_measure(self):
        """Test that discrepancies add over independent coordinates."""
        spec = catalog("product", {"components": [{"name": "uniform"}, {"name": "uniform"}]})
        result = run_degrees(spec, [3], probe=False)[0]
        assert result.report.s_squared == pytest.approx(0.4, abs=1e-7)

    def test_uncentered_measure(self):
        """Test that the weak problem needs a centered measure."""
        spec = catalog("uniform", {"a": 0.0, "b": 1.0})
        basis = build_basis(spec, 2)
        with pytest.raises(CenteringError):
            assemble(spec, basis)


class TestPotentialReference:
    """Test cases for the potential-reference weak problem."""

    def test_own_potential_gives_identity(self):
        """Test that grad V of the measure itself yields the identity kernel."""
        spec = catalog("gaussian", {"variance": 0.5})
        result = run_degrees(spec, [2], mode=ReferenceMode.POTENTIAL)[0]
        tau = kernel_field(result.solution)

        np.testing.assert_allclose(tau.matrix(np.array([-1.0, 0.0, 1.0]))[:, 0, 0], 1.0, atol=1e-8)
        assert result.report.residual_max < 1e-6
        assert result.report.out_of_span_residual < 1e-6
        assert result.report.bound_value is None

    def test_reference_differs_from_measure(self):
        """Test a Laplace measure against the standard Gaussian potential."""
        spec = catalog("laplace")
        result = run_degrees(spec, [3], mode=ReferenceMode.POTENTIAL,
                             reference=catalog("gaussian"), probe=False)[0]
        # grad V = x, so this is the Gaussian-reference problem again
        gaussian_mode = run_degrees(spec, [3], probe=False)[0]
        assert result.solution.energy == pytest.approx(gaussian_mode.solution.energy, rel=1e-10)


class TestSolution:
    """Test cases for solution persistence."""

    def test_save_and_load(self, tmp_path):
        """Test writing and reading a solution file."""
        result = run_degrees(catalog("uniform"), [3], probe=False)[0]
        path = result.solution.save(tmp_path / "solution.json")
        data = json.loads(path.read_text())
        loaded = GalerkinSolution.load(path)

        assert data["degree"] == 3
        assert data["mode"] == "gaussian-reference"
        assert loaded.energy == result.solution.energy
        x = np.linspace(-1.0, 1.0, 5)
        np.testing.assert_allclose(kernel_field(loaded).matrix(x), kernel_field(result.solution).matrix(x))

    def test_solution_json_is_stable(self):
        """Test that solving twice gives identical JSON."""
        first = run_degrees(catalog("laplace"), [2], probe=False)[0].solution.to_json()
        second = run_degrees(catalog("laplace"), [2], probe=False)[0].solution.to_json()
        assert first == second

    def test_ridge_flag(self):
        """Test that a forced ridge is reported."""
        spec = catalog("uniform")
        basis = build_basis(spec, 2)
        system = assemble(spec, basis)
        solution = solve(system, GalerkinSettings(max_condition=1.0))

        assert solution.regularized
        report = discrepancy_estimate(solution, spec, probe=False)
        assert report.regularized
