"""Logging setup for pipeline runs."""

from __future__ import annotations

import os
import sys

import logfire
from loguru import logger

from .config import PipelineSettings


def setup_logging(settings: PipelineSettings | None = None, level: str | None = None) -> None:
    """Configure the loguru sink and Logfire; Logfire stays local without a token."""

    logger.remove()
    log_level = level or (settings.log_level if settings else None) or os.getenv("LOG_LEVEL")
    logger.add(
        sink=sys.stderr,
        level=log_level or "INFO",
        colorize=False,
        backtrace=True,
        diagnose=False,
        format="{time:HH:mm:ss} | {level:<7} | {message}",
    )

    logfire.configure(
        token=settings.logfire_token if settings else None,
        scrubbing=False,
        send_to_logfire="if-token-present",
        service_name="pairscore-rct",
        environment=os.getenv("APP_ENV", "development"),
        console=False,
    )
    logfire.instrument_httpx()
