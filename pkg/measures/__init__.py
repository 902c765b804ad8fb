"""
Probability measures: catalog, representation, sampling, moments.
"""

from .catalog import catalog, list_measures
from .moments import moments, require_moments, standardize
from .sampling import sample
from .spec import MeasureSpec, SamplerKind, SupportKind, SupportRegion, affine_transform, scale, shift

__all__ = [
    'MeasureSpec',
    'SamplerKind',
    'SupportKind',
    'SupportRegion',
    'affine_transform',
    'catalog',
    'list_measures',
    'moments',
    'require_moments',
    'sample',
    'scale',
    'shift',
    'standardize',
]
