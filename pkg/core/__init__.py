"""
Core Interfaces and Base Classes

Data models, exceptions and abstract contracts shared by every steinlab package.
"""

from .interfaces import IExperimentRunner, IReportEmitter, ITaskPool
from .data_models import (
    BoundDirection,
    DiscrepancyReport,
    ExperimentRecord,
    KernelSource,
    MomentReport,
    ReferenceMode,
    SpectralMethod,
    SpectralReport,
)
from .base_component import BaseComponent

__all__ = [
    'IExperimentRunner',
    'IReportEmitter',
    'ITaskPool',
    'BoundDirection',
    'DiscrepancyReport',
    'ExperimentRecord',
    'KernelSource',
    'MomentReport',
    'ReferenceMode',
    'SpectralMethod',
    'SpectralReport',
    'BaseComponent',
]
