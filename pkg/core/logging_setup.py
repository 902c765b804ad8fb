"""
Logging configuration.

structlog is layered over the standard logging module so that library code
can log with ``structlog.get_logger(__name__)`` and the CLI decides the
rendering (console or JSON lines) and level.
"""

import logging
import sys
from typing import Optional

import structlog

from config.settings import LoggingSettings


def configure_logging(settings: Optional[LoggingSettings] = None) -> None:
    """Configure structlog and the root logger from ``settings``."""
    settings = settings or LoggingSettings()
    level = getattr(logging, settings.level.upper(), logging.INFO)

    handlers = []
    if settings.console_output:
        handlers.append(logging.StreamHandler(sys.stderr))
    if settings.file:
        handlers.append(logging.FileHandler(settings.file))
    logging.basicConfig(level=level, format="%(message)s", handlers=handlers or None, force=True)

    renderer = (
        structlog.processors.JSONRenderer(sort_keys=True)
        if settings.json_output
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.make_filtering_bound_logger(level),
        cache_logger_on_first_use=False,
    )
