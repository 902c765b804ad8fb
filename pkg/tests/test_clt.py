"""
Tests for the CLT experiment engine.
"""

import math

import numpy as np
import pytest

from config.settings import CLTSettings, KernelSettings, SystemSettings
from core.exceptions import InsufficientSamplesError, IsotropyError
from clt import (
    LawProfile, clt_experiment, convolve_iid_1d, convolve_mixed_1d, draw_batches, empirical_discrepancy,
    entropy_fisher, jumps_at_boundary, mixed_sum_w2_check, normalized_sums, propagate_kernel,
    resolve_poincare, smooth_with_gaussian, smoothed_fisher_check, w2_empirical_nd, w2_quantile_1d
)
from kernel1d import ConstantKernel, GridDensity1D, closed_form_kernel
from measures import catalog, sample

UNIFORM_CP = 12.0 / math.pi ** 2


@pytest.fixture
def kernel_settings():
    """Coarser grids than the defaults to keep convolutions quick."""
    return KernelSettings(grid_nodes=2 ** 12 + 1)


@pytest.fixture
def system(kernel_settings):
    """System settings using the coarse kernel grid."""
    settings = SystemSettings()
    settings.kernel = kernel_settings
    return settings


def by_label(records, label):
    return [r for r in records if r.label == label]


class TestConvolution:
    """Test cases for density convolution."""

    def test_sum_stays_standardized(self, kernel_settings):
        """Test that normalized sums keep mean 0 and variance 1."""
        p = GridDensity1D.from_spec(catalog("centered-exponential"), kernel_settings)
        law = convolve_iid_1d(p, 4)
        assert law.mean() == pytest.approx(0.0, abs=1e-8)
        assert law.variance() == pytest.approx(1.0, abs=1e-8)
        # third moment of the normalized sum is 2 / sqrt(n)
        assert law.moment(3) == pytest.approx(1.0, rel=1e-3)

    def test_n_one_is_identity(self, kernel_settings):
        """Test that n = 1 returns the density itself."""
        p = GridDensity1D.from_spec(catalog("uniform"), kernel_settings)
        assert convolve_iid_1d(p, 1) is p

    def test_non_standardized_input(self, kernel_settings):
        """Test rejection of a density with variance 4."""
        p = GridDensity1D.from_spec(catalog("gaussian", {"variance": 4.0}), kernel_settings)
        with pytest.raises(IsotropyError):
            convolve_iid_1d(p, 2)

    def test_index_range(self, kernel_settings):
        """Test the limits on n."""
        p = GridDensity1D.from_spec(catalog("uniform"), kernel_settings)
        with pytest.raises(ValueError):
            convolve_iid_1d(p, 0)
        with pytest.raises(ValueError):
            convolve_iid_1d(p, 1000, CLTSettings(max_n=256))

    def test_mixed_sum(self, kernel_settings):
        """Test the sum of a uniform and a Laplace variable."""
        densities = [GridDensity1D.from_spec(catalog(name), kernel_settings) for name in ("uniform", "laplace")]
        law = convolve_mixed_1d(densities)
        assert law.variance() == pytest.approx(1.0, abs=1e-8)

    def test_smoothing(self, kernel_settings):
        """Test that smoothing a Gaussian leaves it Gaussian."""
        p = GridDensity1D.from_spec(catalog("gaussian"), kernel_settings)
        smoothed = smooth_with_gaussian(p, 0.5)
        assert smoothed.t == 0.5
        assert smoothed.density.variance() == pytest.approx(1.0, abs=1e-8)
        with pytest.raises(ValueError):
            smooth_with_gaussian(p, 1.0)

    def test_default_grid_sum_of_kinked_density(self):
        """Test standardizing the sum of two exponentials on the default grid."""
        p = GridDensity1D.from_spec(catalog("centered-exponential"), KernelSettings())
        law = convolve_iid_1d(p, 2)
        assert law.mass() == pytest.approx(1.0, abs=1e-10)
        assert law.mean() == pytest.approx(0.0, abs=1e-8)
        assert law.variance() == pytest.approx(1.0, abs=1e-8)
        assert law.grid.m == p.grid.m


class TestTransport:
    """Test cases for W2 distances."""

    def test_scaled_gaussians(self, kernel_settings):
        """Test W2(N(0, 4), N(0, 1)) = 1."""
        p = GridDensity1D.from_spec(catalog("gaussian", {"variance": 4.0}), kernel_settings)
        q = GridDensity1D.from_spec(catalog("gaussian"), kernel_settings)
        assert w2_quantile_1d(p, q) == pytest.approx(1.0, rel=1e-4)

    def test_distance_to_itself(self, kernel_settings):
        """Test W2(p, p) = 0."""
        p = GridDensity1D.from_spec(catalog("laplace"), kernel_settings)
        assert w2_quantile_1d(p, p) == pytest.approx(0.0, abs=1e-12)

    def test_empirical_shift(self):
        """Test the assignment distance of a shifted point cloud."""
        xs = sample(catalog("gaussian", {"dim": 2}), 200, seed=0)
        assert w2_empirical_nd(xs, xs + np.array([3.0, 4.0])) == pytest.approx(5.0)

    def test_empirical_limits(self):
        """Test the assignment size and shape checks."""
        with pytest.raises(ValueError):
            w2_empirical_nd(np.zeros((10, 2)), np.zeros((11, 2)))
        with pytest.raises(ValueError):
            w2_empirical_nd(np.zeros((20, 1)), np.zeros((20, 1)), max_points=10)


class TestInformation:
    """Test cases for entropy and Fisher information."""

    def test_gaussian_is_zero(self, kernel_settings):
        """Test H = I = 0 for the standard Gaussian."""
        entropy, fisher = entropy_fisher(GridDensity1D.from_spec(catalog("gaussian"), kernel_settings))
        assert entropy == pytest.approx(0.0, abs=1e-8)
        assert fisher == pytest.approx(0.0, abs=1e-6)

    def test_scaled_gaussian(self, kernel_settings):
        """Test the closed forms for N(0, 4)."""
        p = GridDensity1D.from_spec(catalog("gaussian", {"variance": 4.0}), kernel_settings)
        entropy, fisher = entropy_fisher(p)
        # H = (s2 - 1 - log s2) / 2, I = s2 - 2 + 1/s2
        assert entropy == pytest.approx(0.5 * (3.0 - math.log(4.0)), rel=1e-6)
        assert fisher == pytest.approx(2.25, rel=1e-4)

    def test_boundary_jump_gives_infinite_fisher(self, kernel_settings):
        """Test that a jump at the end of the support has infinite Fisher information."""
        p = GridDensity1D.from_spec(catalog("uniform"), kernel_settings)
        _, fisher = entropy_fisher(p, jump_at_boundary=True)
        assert math.isinf(fisher)

    def test_jumps_at_boundary(self):
        """Test boundary jump detection."""
        assert jumps_at_boundary(catalog("uniform"))
        assert jumps_at_boundary(catalog("centered-exponential"))
        assert not jumps_at_boundary(catalog("laplace"))
        assert not jumps_at_boundary(catalog("gaussian"))

    def test_smoothed_fisher_uniform(self, kernel_settings):
        """Test the smoothed Fisher bound for the uniform law at n = 4, t = 1/2."""
        record = smoothed_fisher_check(catalog("uniform"), 4, 0.5, kernel_settings=kernel_settings)
        assert record.label == "fisher"
        assert record.bound == pytest.approx(0.25 * (UNIFORM_CP - 1.0) / 2.0, rel=1e-12)
        assert record.passed
        assert record.measured < 0.0135

    def test_smoothed_fisher_arguments(self):
        """Test argument validation."""
        with pytest.raises(ValueError):
            smoothed_fisher_check(catalog("uniform"), 4, 1.5)
        with pytest.raises(ValueError):
            smoothed_fisher_check(catalog("gaussian", {"dim": 2}), 4, 0.5)

    def test_default_grid_triangular_law(self):
        """Test the entropy of the uniform sum of two, whose density has a kink at 0."""
        law = convolve_iid_1d(GridDensity1D.from_spec(catalog("uniform"), KernelSettings()), 2)
        entropy, fisher = entropy_fisher(law, jump_at_boundary=True)
        uniform_entropy = 0.5 * math.log(2.0 * math.pi) + 0.5 - math.log(2.0 * math.sqrt(3.0))
        assert 0.0 < entropy < uniform_entropy
        assert fisher == math.inf


class TestCLTExperiment:
    """Test cases for clt_experiment."""

    def test_exponential_w2_rate(self, system):
        """Test W2(nu_n, gamma)^2 <= 3 / n for the centered exponential."""
        records = clt_experiment(catalog("centered-exponential"), [1, 2, 4, 8], ["w2-rate"], system=system)
        rates = by_label(records, "w2-rate")

        assert [r.n for r in rates] == [1, 2, 4, 8]
        for r in rates:
            assert r.bound == pytest.approx(3.0 / r.n)
            assert r.passed
            assert r.metadata["cp_source"] == "catalog"

    def test_uniform_monotonicity(self, system):
        """Test S^2(nu_n) <= (m / n) S^2(nu_m) for every pair."""
        records = clt_experiment(catalog("uniform"), [1, 2, 4], ["monotonicity"], system=system)
        pairs = {(r.m, r.n) for r in by_label(records, "monotonicity")}

        assert pairs == {(1, 2), (1, 4), (2, 4)}
        assert all(r.passed for r in records)

    def test_exponential_skewness(self, system):
        """Test S^2 >= |E X^3|^2 / 9 = 4/9 for the centered exponential."""
        records = clt_experiment(catalog("centered-exponential"), [1], ["skewness"], system=system)
        (record,) = by_label(records, "skewness")

        assert record.bound == pytest.approx(4.0 / 9.0, rel=1e-4)
        assert record.measured == pytest.approx(1.0, rel=1e-3)
        assert record.passed

    def test_w2_below_discrepancy(self, system):
        """Test W2 <= S for the Laplace law."""
        records = clt_experiment(catalog("laplace"), [1, 4], ["w2-vs-discrepancy"], system=system)
        assert len(records) == 2
        assert all(r.passed for r in records)

    def test_gaussian_w2_below_discrepancy_at_default_grid(self):
        """Test that W2 <= S holds for the Gaussian at the grid's numerical floor."""
        records = clt_experiment(catalog("gaussian"), [1, 2, 4, 8], ["w2-vs-discrepancy"],
                                 system=SystemSettings())
        assert len(records) == 4
        assert all(r.passed for r in records)
        assert all(r.measured < 1e-10 for r in records)

    def test_rio_records_are_informational(self, system):
        """Test that the asymptotic record never fails the run."""
        records = clt_experiment(catalog("centered-exponential"), [16], ["rio-asymptotic"], system=system)
        (record,) = records
        assert record.informational
        assert record.bound == pytest.approx(2.0 / 3.0, rel=1e-3)
        assert not record.is_failure()

    def test_laplace_entropy_and_hsi(self, system):
        """Test the entropy and HSI bounds where Fisher information is finite."""
        records = clt_experiment(catalog("laplace"), [2, 4], ["entropy", "hsi"], system=system)
        assert by_label(records, "entropy")
        assert by_label(records, "hsi")
        assert all(r.passed for r in records)

    def test_fisher_needs_t(self, system):
        """Test that the Fisher check is skipped without a smoothing parameter."""
        assert clt_experiment(catalog("uniform"), [2], ["fisher"], system=system) == []
        system.clt.t = 0.5
        (record,) = clt_experiment(catalog("uniform"), [4], ["fisher"], system=system)
        assert record.passed

    def test_product_tensorizes(self, system):
        """Test that a product law doubles the one-dimensional bound."""
        spec = catalog("product", {"components": [{"name": "uniform"}, {"name": "uniform"}]})
        records = clt_experiment(spec, [2], ["w2-rate"], system=system)
        (record,) = records
        assert record.bound == pytest.approx(2.0 * (UNIFORM_CP - 1.0) / 2.0)
        assert record.passed

    def test_unknown_check(self, system):
        """Test rejection of an unknown check name."""
        with pytest.raises(ValueError):
            clt_experiment(catalog("uniform"), [1], ["berry-esseen"], system=system)

    def test_non_isotropic_measure(self, system):
        """Test rejection of a non-isotropic measure in d = 2."""
        spec = catalog("gaussian", {"covariance": [[2.0, 0.0], [0.0, 1.0]]})
        with pytest.raises(IsotropyError):
            clt_experiment(spec, [1], ["w2-rate"], system=system)

    def test_records_are_sorted(self, system):
        """Test canonical ordering of the output."""
        records = clt_experiment(catalog("laplace"), [1, 2], ["w2-rate", "monotonicity"], system=system)
        assert records == sorted(records, key=lambda r: r.sort_key())


class TestPoincareResolution:
    """Test cases for resolve_poincare."""

    def test_declared_wins(self, system):
        """Test that a declared constant overrides the catalog."""
        assert resolve_poincare(catalog("uniform"), 1.5, system) == {"cp": 1.5, "cp_source": "declared"}

    def test_catalog_constant(self, system):
        """Test the catalog constant."""
        result = resolve_poincare(catalog("laplace"), None, system)
        assert result["cp_source"] == "catalog"
        assert result["cp"] == pytest.approx(2.0)

    def test_spectral_fallback(self, system):
        """Test the finite-difference fallback for an expression measure."""
        spec = catalog("expression", {"log_density": "-x1**2/2"})
        result = resolve_poincare(spec, None, system)
        assert result["cp_source"] == "spectral-estimate"
        assert result["cp"] == pytest.approx(1.0, rel=1e-3)


class TestMixedSums:
    """Test cases for non-identical summands."""

    def test_mixed_w2(self, system):
        """Test the mixed-sum W2 bound for uniform plus Laplace."""
        record = mixed_sum_w2_check([catalog("uniform"), catalog("laplace")], system=system)
        assert record.label == "mixed-w2"
        assert record.n == 2
        assert record.bound == pytest.approx((UNIFORM_CP - 1.0 + 1.0) / 4.0)
        assert record.passed

    def test_mixed_needs_one_dimension(self, system):
        """Test rejection of multivariate summands."""
        with pytest.raises(ValueError):
            mixed_sum_w2_check([catalog("gaussian", {"dim": 2})], system=system)

    def test_law_profile_addition(self):
        """Test adding per-axis profiles."""
        a = LawProfile(n=2, w2_squared=0.1, s_squared=0.2, entropy=0.01, fisher=None, runtime_ms=3)
        b = LawProfile(n=2, w2_squared=0.3, s_squared=0.4, entropy=0.02, fisher=1.0, runtime_ms=4)
        total = a + b

        assert total.w2_squared == pytest.approx(0.4)
        assert total.s_squared == pytest.approx(0.6)
        assert total.entropy == pytest.approx(0.03)
        assert total.fisher is None
        assert total.runtime_ms == 7


class TestPropagation:
    """Test cases for kernel propagation."""

    def test_too_few_samples(self):
        """Test the minimum sample count."""
        batches = draw_batches(catalog("uniform"), 2, 100, seed=0)
        with pytest.raises(InsufficientSamplesError):
            propagate_kernel(ConstantKernel(1), batches, 2, 1)

    def test_m_must_divide_n(self):
        """Test the block structure check."""
        batches = draw_batches(catalog("uniform"), 3, 2000, seed=0)
        with pytest.raises(ValueError):
            propagate_kernel(ConstantKernel(1), batches, 3, 2)

    def test_normalized_sums(self):
        """Test the block sums."""
        batches = np.ones((5, 4, 1))
        np.testing.assert_allclose(normalized_sums(batches), 2.0)
        np.testing.assert_allclose(normalized_sums(batches, 1), 1.0)

    def test_identity_propagates_to_identity(self):
        """Test that the Gaussian kernel stays the identity."""
        batches = draw_batches(catalog("gaussian"), 2, 5000, seed=1)
        tau = propagate_kernel(ConstantKernel(1), batches, 2, 1)
        assert empirical_discrepancy(tau, normalized_sums(batches)) < 1e-12

    @pytest.mark.slow
    def test_uniform_propagation_bound(self, kernel_settings):
        """Test E||tau_n - Id||^2 <= (m/n) S^2(nu_m) (1 + slack) on fresh draws."""
        spec = catalog("uniform")
        p = GridDensity1D.from_spec(spec, kernel_settings)
        tau_1 = closed_form_kernel(p, kernel_settings)
        batches = draw_batches(spec, 2, 40_000, seed=2024)
        tau_2 = propagate_kernel(tau_1, batches, 2, 1)
        fresh = normalized_sums(draw_batches(spec, 2, 10_000, seed=2025))

        assert empirical_discrepancy(tau_2, fresh) <= 0.5 * 0.2 * 1.1
