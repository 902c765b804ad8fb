"""
CLT experiment engine: convolution, transport distances, information
functionals, kernel propagation and bound-verification records.
"""

from .convolution import SmoothedLaw, convolve_iid_1d, convolve_mixed_1d, require_standardized, smooth_with_gaussian
from .experiment import CHECKS, LawProfile, clt_experiment, jumps_at_boundary, mixed_sum_w2_check, resolve_poincare
from .information import entropy_fisher, smoothed_fisher_check
from .propagation import PropagatedKernel, draw_batches, empirical_discrepancy, normalized_sums, propagate_kernel
from .transport import standard_normal_grid, w2_empirical_nd, w2_quantile_1d, w2_to_gaussian

__all__ = [
    'CHECKS',
    'LawProfile',
    'PropagatedKernel',
    'SmoothedLaw',
    'clt_experiment',
    'convolve_iid_1d',
    'convolve_mixed_1d',
    'draw_batches',
    'empirical_discrepancy',
    'entropy_fisher',
    'jumps_at_boundary',
    'mixed_sum_w2_check',
    'normalized_sums',
    'propagate_kernel',
    'require_standardized',
    'resolve_poincare',
    'smooth_with_gaussian',
    'smoothed_fisher_check',
    'standard_normal_grid',
    'w2_empirical_nd',
    'w2_quantile_1d',
    'w2_to_gaussian',
]
