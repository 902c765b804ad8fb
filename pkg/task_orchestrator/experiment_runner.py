"""
Experiment runner.

Turns a validated ExperimentConfig into task payloads, hands them to a task
pool and collects the records. A failing task becomes a failed ``task-error``
record and the remaining tasks still run.
"""

from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.config_manager import ExperimentConfig
from config.settings import SystemSettings
from core.base_component import BaseComponent
from core.data_models import ExperimentRecord
from core.interfaces import IExperimentRunner, ITaskPool
from task_orchestrator.ray_task_pool import RayTaskPool
from task_orchestrator.task_handlers import build_payload


@dataclass
class TaskOutcome:
    """Bookkeeping for one executed task."""
    index: int
    task_type: str
    measure: str
    ok: bool
    record_count: int = 0
    error: Optional[str] = None
    error_type: Optional[str] = None
    runtime_ms: int = 0


class ExperimentRunner(BaseComponent, IExperimentRunner):
    """Runs every task of an experiment and keeps the canonically sorted records."""

    def __init__(self, experiment: ExperimentConfig, settings: Optional[SystemSettings] = None,
                 pool: Optional[ITaskPool] = None):
        settings = settings or SystemSettings.from_dict(experiment.settings)
        super().__init__("experiment_runner", {"experiment": experiment.name})
        self.experiment = experiment
        self.settings = settings
        self.pool = pool or RayTaskPool(settings.workers)
        self.records: List[ExperimentRecord] = []
        self.outcomes: List[TaskOutcome] = []
        self.completed_at: Optional[datetime] = None

    async def initialize(self) -> bool:
        out_dir = Path(self.settings.output.out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            self.logger.error("output_dir_unavailable", path=str(out_dir), error=str(e))
            return False
        if isinstance(self.pool, BaseComponent) and not self.pool.is_initialized:
            return await self.pool._safe_initialize()
        return True

    async def stop(self) -> bool:
        if isinstance(self.pool, BaseComponent):
            return await self.pool._safe_stop()
        return True

    async def health_check(self) -> Dict[str, Any]:
        return {
            'component': self.component_name,
            'status': 'healthy' if self.is_initialized else 'unhealthy',
            'experiment': self.experiment.name,
            'tasks': len(self.experiment.tasks),
            'records': len(self.records),
            'timestamp': datetime.now(),
        }

    def build_payloads(self) -> List[Dict[str, Any]]:
        out_dir = Path(self.settings.output.out_dir)
        return [
            build_payload(index, task, self.experiment.measures, self.settings, out_dir)
            for index, task in enumerate(self.experiment.tasks)
        ]

    async def run_experiment(self) -> List[ExperimentRecord]:
        """Run all tasks; the returned records are sorted by (label, n, m, seed, measure)."""
        if not self.is_initialized and not await self._safe_initialize():
            raise RuntimeError(f"Experiment runner for {self.experiment.name} could not be initialized")
        self.logger.info("experiment_started", tasks=len(self.experiment.tasks))
        results = await self.pool.run_tasks(self.build_payloads())

        records: List[ExperimentRecord] = []
        outcomes: List[TaskOutcome] = []
        for task, result in zip(self.experiment.tasks, results):
            task_records = [ExperimentRecord(**r) for r in result.get("records", [])]
            outcome = TaskOutcome(
                index=result["index"],
                task_type=str(task.type),
                measure=task.measure,
                ok=bool(result.get("ok")),
                record_count=len(task_records),
                error=result.get("error"),
                error_type=result.get("error_type"),
                runtime_ms=int(result.get("runtime_ms", 0)),
            )
            if not outcome.ok:
                task_records.append(self._failure_record(task.label, outcome))
            records.extend(task_records)
            outcomes.append(outcome)

        self.records = sorted(records, key=ExperimentRecord.sort_key)
        self.outcomes = outcomes
        self.completed_at = datetime.now()
        self.logger.info("experiment_finished", records=len(self.records),
                         failed_records=sum(1 for r in self.records if r.is_failure()),
                         failed_tasks=sum(1 for o in outcomes if not o.ok))
        return self.records

    @staticmethod
    def _failure_record(label: Optional[str], outcome: TaskOutcome) -> ExperimentRecord:
        return ExperimentRecord(
            label=f"{label}.task-error" if label else "task-error",
            n=outcome.index,
            measured=1.0,
            bound=0.0,
            passed=False,
            measure=outcome.measure,
            runtime_ms=outcome.runtime_ms,
            metadata={"task_type": outcome.task_type, "error": outcome.error, "error_type": outcome.error_type},
        )

    def exit_status(self) -> int:
        """0 when every asserted record passed and every task ran, 1 otherwise."""
        if any(not o.ok for o in self.outcomes):
            return 1
        return 1 if any(r.is_failure() for r in self.records) else 0

    def get_run_statistics(self) -> Dict[str, Any]:
        """Per-label pass counts and task totals."""
        by_label: Dict[str, Dict[str, int]] = {}
        for record in self.records:
            entry = by_label.setdefault(record.label, {"passed": 0, "failed": 0, "informational": 0})
            if record.informational:
                entry["informational"] += 1
            elif record.passed:
                entry["passed"] += 1
            else:
                entry["failed"] += 1
        return {
            'experiment': self.experiment.name,
            'tasks_total': len(self.outcomes),
            'tasks_failed': sum(1 for o in self.outcomes if not o.ok),
            'records_total': len(self.records),
            'by_label': dict(sorted(by_label.items())),
        }
