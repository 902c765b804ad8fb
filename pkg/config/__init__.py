"""
Configuration Management

Typed settings and the experiment-file loader for steinlab.
"""

from .config_manager import ConfigManager, ExperimentConfig, MeasureDecl, TaskDecl, TaskType
from .settings import (
    CLTSettings,
    GalerkinSettings,
    IntegrationSettings,
    KernelSettings,
    LoggingSettings,
    OutputSettings,
    SpectralSettings,
    SystemSettings,
    WorkerSettings,
)

__all__ = [
    'ConfigManager',
    'ExperimentConfig',
    'MeasureDecl',
    'TaskDecl',
    'TaskType',
    'CLTSettings',
    'GalerkinSettings',
    'IntegrationSettings',
    'KernelSettings',
    'LoggingSettings',
    'OutputSettings',
    'SpectralSettings',
    'SystemSettings',
    'WorkerSettings',
]
