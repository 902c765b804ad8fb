"""
Worker pool for experiment tasks.

With more than one job the payloads are fanned out as Ray tasks on a local
cluster; otherwise they run inline in submission order. Either way results
come back in input order, so report ordering never depends on scheduling.
"""

import asyncio
import time
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

from config.settings import WorkerSettings
from core.base_component import BaseComponent
from core.interfaces import ITaskPool
from task_orchestrator.task_handlers import execute_payload

try:
    import ray
    RAY_AVAILABLE = True
except ImportError:
    ray = None
    RAY_AVAILABLE = False


class RayTaskPool(BaseComponent, ITaskPool):
    """
    Executes task payloads inline or on Ray workers.

    A worker crash is reported as a failed result for its payload; it never
    aborts the remaining tasks.
    """

    def __init__(self, settings: Optional[WorkerSettings] = None):
        settings = settings or WorkerSettings()
        super().__init__("ray_task_pool", {"jobs": settings.jobs, "ray_init": dict(settings.ray_init)})
        self.settings = settings
        self.jobs = max(1, int(settings.jobs))
        self.use_ray = self.jobs > 1 and RAY_AVAILABLE
        self._remote_execute = None
        self._owns_cluster = False
        self.tasks_processed = 0
        self.tasks_failed = 0
        self.last_activity: Optional[datetime] = None

        if self.jobs > 1 and not RAY_AVAILABLE:
            self.logger.warning("ray_unavailable", jobs=self.jobs, fallback="inline")

    async def initialize(self) -> bool:
        """Start a local Ray cluster when running with several jobs."""
        try:
            if self.use_ray:
                if not ray.is_initialized():
                    init_config = {
                        'num_cpus': self.jobs,
                        'ignore_reinit_error': True,
                        'include_dashboard': False,
                        'log_to_driver': False,
                        **self.settings.ray_init,
                    }
                    ray.init(**init_config)
                    self._owns_cluster = True
                self._remote_execute = ray.remote(num_cpus=1)(execute_payload)
                self.logger.info("ray_pool_initialized", jobs=self.jobs)
            else:
                self.logger.info("inline_pool_initialized")
            self.is_initialized = True
            return True
        except Exception as e:
            self.logger.error("pool_initialization_failed", error=str(e))
            return False

    async def stop(self) -> bool:
        """Shut down the Ray cluster if this pool started it."""
        try:
            if self.use_ray and self._owns_cluster and ray.is_initialized():
                ray.shutdown()
                self._owns_cluster = False
            return True
        except Exception as e:
            self.logger.error("pool_stop_failed", error=str(e))
            return False

    async def health_check(self) -> Dict[str, Any]:
        return {
            'component': self.component_name,
            'status': 'healthy' if self.is_initialized else 'unhealthy',
            'ray_available': RAY_AVAILABLE,
            'backend': 'ray' if self.use_ray else 'inline',
            'jobs': self.jobs,
            'timestamp': datetime.now(),
        }

    async def run_tasks(self, payloads: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
        """Execute every payload and return the results in input order."""
        if not self.is_initialized and not await self._safe_initialize():
            raise RuntimeError("Task pool could not be initialized")
        started = time.perf_counter()
        if self.use_ray:
            results = await self._run_remote(payloads)
        else:
            results = [execute_payload(payload) for payload in payloads]

        self.tasks_processed += len(results)
        self.tasks_failed += sum(1 for r in results if not r.get("ok"))
        self.last_activity = datetime.now()
        self.logger.info("tasks_completed", count=len(results), failed=self.tasks_failed,
                         elapsed_s=round(time.perf_counter() - started, 3))
        return results

    async def _run_remote(self, payloads: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
        refs = [self._remote_execute.remote(payload) for payload in payloads]
        outcomes = await asyncio.gather(*refs, return_exceptions=True)
        results = []
        for payload, outcome in zip(payloads, outcomes):
            if isinstance(outcome, BaseException):
                self.logger.error("worker_failed", index=payload.get("index"), error=str(outcome))
                outcome = {"index": payload.get("index"), "ok": False, "records": [], "error": str(outcome),
                           "error_type": type(outcome).__name__, "runtime_ms": 0}
            results.append(outcome)
        return results

    async def get_pool_status(self) -> Dict[str, Any]:
        return {
            **self.get_status(),
            'backend': 'ray' if self.use_ray else 'inline',
            'jobs': self.jobs,
            'tasks_processed': self.tasks_processed,
            'tasks_failed': self.tasks_failed,
            'last_activity': self.last_activity,
        }
