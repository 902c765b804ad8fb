"""
Task Orchestrator Component

Runs declared experiment tasks, inline or across Ray workers.
"""

from .experiment_runner import ExperimentRunner, TaskOutcome
from .ray_task_pool import RAY_AVAILABLE, RayTaskPool
from .task_handlers import HANDLERS, TaskContext, build_measure, build_payload, execute_payload

__all__ = [
    'ExperimentRunner',
    'HANDLERS',
    'RAY_AVAILABLE',
    'RayTaskPool',
    'TaskContext',
    'TaskOutcome',
    'build_measure',
    'build_payload',
    'execute_payload',
]
