"""
Core interfaces for steinlab.

Abstract contracts for the orchestration components, so that the runner can
be driven with an inline or a distributed worker pool.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Sequence

from .data_models import ExperimentRecord


class ITaskPool(ABC):
    """Interface for executing experiment task payloads."""

    @abstractmethod
    async def run_tasks(self, payloads: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
        """Execute task payloads and return one result dictionary per payload, in input order."""
        pass

    @abstractmethod
    async def get_pool_status(self) -> Dict[str, Any]:
        """Get worker pool status."""
        pass


class IExperimentRunner(ABC):
    """Interface for running a validated experiment."""

    @abstractmethod
    async def run_experiment(self) -> List[ExperimentRecord]:
        """Run every task and return the canonically sorted records."""
        pass

    @abstractmethod
    def exit_status(self) -> int:
        """0 when every asserted record passed and no task failed, 1 otherwise."""
        pass


class IReportEmitter(ABC):
    """Interface for writing records to report files."""

    @abstractmethod
    def emit(self, records: Sequence[ExperimentRecord], fmt: str, path: Path) -> Path:
        """Write ``records`` in ``fmt`` to ``path``."""
        pass
