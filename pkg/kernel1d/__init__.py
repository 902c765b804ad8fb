"""
Exact one-dimensional Stein kernels, discrepancies and weak residuals.
"""

from .density import GridDensity1D
from .field import ConstantKernel, KernelField, TabulatedKernel1D
from .io import read_kernel_csv, write_kernel_csv
from .residual import EmpiricalMeasure, TestFunction, default_test_bank, weak_residual
from .stein_kernel import closed_form_kernel, discrepancy_1d

__all__ = [
    'ConstantKernel',
    'EmpiricalMeasure',
    'GridDensity1D',
    'KernelField',
    'TabulatedKernel1D',
    'TestFunction',
    'closed_form_kernel',
    'default_test_bank',
    'discrepancy_1d',
    'read_kernel_csv',
    'weak_residual',
    'write_kernel_csv',
]
