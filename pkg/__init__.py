"""
steinlab - Stein kernels, Stein discrepancies and CLT rates

Computes Stein kernels of probability measures (closed form in one dimension,
Galerkin in several), estimates Poincare constants, and checks the
discrepancy, transport, entropy and Fisher-information bounds of normalized
sums against experiment files.
"""

__version__ = "0.1.0"
__author__ = "steinlab developers"
__description__ = "Stein kernel and CLT bound experiments"

# Core imports
from core import (
    BaseComponent,
    DiscrepancyReport,
    ExperimentRecord,
    SpectralReport,
)

# Configuration imports
from config import (
    ConfigManager,
    ExperimentConfig,
    SystemSettings,
)

__all__ = [
    # Core models
    'BaseComponent',
    'DiscrepancyReport',
    'ExperimentRecord',
    'SpectralReport',

    # Configuration
    'ConfigManager',
    'ExperimentConfig',
    'SystemSettings',
]
