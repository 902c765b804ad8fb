"""
Gradient-form Stein kernels from a Galerkin weak problem.
"""

from .assembly import StiffnessSystem, assemble, rhs_field
from .basis import PolyBasis, build_basis, multi_indices, weighted_gram
from .solver import (
    DegreeResult,
    GalerkinKernel,
    GalerkinSolution,
    discrepancy_estimate,
    in_span_residual,
    kernel_field,
    run_degrees,
    solve,
)

__all__ = [
    'DegreeResult',
    'GalerkinKernel',
    'GalerkinSolution',
    'PolyBasis',
    'StiffnessSystem',
    'assemble',
    'build_basis',
    'discrepancy_estimate',
    'in_span_residual',
    'kernel_field',
    'multi_indices',
    'rhs_field',
    'run_degrees',
    'solve',
    'weighted_gram',
]
