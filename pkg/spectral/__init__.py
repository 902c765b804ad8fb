"""
Poincare constants, converse weighted inequalities and stability checks.
"""

from .poincare import (
    condition_c_estimate,
    converse_weight_bound,
    first_eigenvalue,
    poincare_constant_1d,
    rayleigh_report,
    rayleigh_variational_bound,
    resolve_weight,
    weighted_second_moment,
)
from .stability import holder_product, require_normalized, stability_check_poincare, stability_check_weighted

__all__ = [
    'condition_c_estimate',
    'converse_weight_bound',
    'first_eigenvalue',
    'holder_product',
    'poincare_constant_1d',
    'rayleigh_report',
    'rayleigh_variational_bound',
    'require_normalized',
    'resolve_weight',
    'stability_check_poincare',
    'stability_check_weighted',
    'weighted_second_moment',
]
