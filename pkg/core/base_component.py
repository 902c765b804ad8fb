"""
Base class for the long-lived steinlab components.

The experiment runner and the worker pool share one lifecycle: created,
initialized, stopped (or failed). ``session()`` wraps a run so that stop is
always reached, which is what releases a Ray cluster the pool started.
"""

from abc import ABC, abstractmethod
from contextlib import asynccontextmanager
from datetime import datetime
from enum import Enum
from typing import Any, AsyncIterator, Dict, Optional

import structlog


class Phase(str, Enum):
    CREATED = "created"
    INITIALIZED = "initialized"
    STOPPED = "stopped"
    FAILED = "failed"


class BaseComponent(ABC):
    """Lifecycle, logging and status shared by runner and pool."""

    def __init__(self, component_name: str, config: Optional[Dict[str, Any]] = None):
        """
        Args:
            component_name: Name bound to every log event of the component
            config: Effective settings, reported by ``get_status``
        """
        self.component_name = component_name
        self.config = config or {}
        self.logger = structlog.get_logger(f"steinlab.{component_name}").bind(component=component_name)
        self.phase = Phase.CREATED
        self.last_error: Optional[str] = None
        self.initialized_at: Optional[datetime] = None

    @property
    def is_initialized(self) -> bool:
        return self.phase == Phase.INITIALIZED

    @is_initialized.setter
    def is_initialized(self, value: bool) -> None:
        if value:
            self.phase = Phase.INITIALIZED
            self.initialized_at = self.initialized_at or datetime.now()
        elif self.phase == Phase.INITIALIZED:
            self.phase = Phase.STOPPED

    @abstractmethod
    async def initialize(self) -> bool:
        """Acquire resources; False when the component cannot run."""
        pass

    @abstractmethod
    async def stop(self) -> bool:
        """Release resources."""
        pass

    @abstractmethod
    async def health_check(self) -> Dict[str, Any]:
        pass

    def get_status(self) -> Dict[str, Any]:
        return {
            'component_name': self.component_name,
            'phase': self.phase.value,
            'is_initialized': self.is_initialized,
            'initialized_at': self.initialized_at,
            'last_error': self.last_error,
            'config': dict(self.config),
        }

    def _fail(self, event: str, error: Optional[BaseException] = None) -> bool:
        self.phase = Phase.FAILED
        self.last_error = str(error) if error is not None else event
        self.logger.error(event, error=self.last_error)
        return False

    async def _safe_initialize(self) -> bool:
        """Initialize, logging instead of raising."""
        try:
            if not await self.initialize():
                return self._fail("component_initialization_failed")
        except Exception as e:
            return self._fail("component_initialization_error", e)
        self.is_initialized = True
        self.logger.info("component_initialized")
        return True

    async def _safe_stop(self) -> bool:
        """Stop, logging instead of raising."""
        try:
            if not await self.stop():
                return self._fail("component_stop_failed")
        except Exception as e:
            return self._fail("component_stop_error", e)
        self.phase = Phase.STOPPED
        self.logger.info("component_stopped")
        return True

    @asynccontextmanager
    async def session(self) -> AsyncIterator["BaseComponent"]:
        """Initialize on entry and always stop on exit.

        Raises:
            RuntimeError: initialization failed
        """
        if not self.is_initialized and not await self._safe_initialize():
            raise RuntimeError(f"{self.component_name} could not be initialized: {self.last_error}")
        try:
            yield self
        finally:
            await self._safe_stop()
