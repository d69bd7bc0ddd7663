#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Logging configuration and utilities for isoprefs.

This module provides the package logger with a rotating file handler
and a filter that stamps every record with the seed of the active run,
so the log of a long sweep can be replayed run by run.

Features:
    - Rotating file handler for log management
    - Seed stamping of log records
    - Log directory overridable through ``ISOPREFS_LOG_DIR``
"""
import logging
import os
from contextlib import contextmanager
from logging.handlers import RotatingFileHandler
from typing import Generator, Optional


WORK_PATH = os.path.abspath(os.environ.get("ISOPREFS_LOG_DIR", os.getcwd()))
LOG_FILE = "isoprefs.log"

_active_seed: Optional[int] = None


class SeedContextFilter(logging.Filter):
    """Logging filter that adds the active run seed to log records.

    Example::

        logger = logging.getLogger(__name__)
        logger.addFilter(SeedContextFilter())
        with seed_context(7):
            logger.info("building forest")
        # Logged as: "[seed=7] building forest"
    """

    def filter(self, record: logging.LogRecord) -> bool:
        """Prefix the record message with the active seed.

        :param record: The log record to process
        :return: True to include the record in output
        """
        record.seed = _active_seed
        if _active_seed is not None and record.msg:
            msg = str(record.msg)
            if not msg.startswith("[seed="):
                record.msg = f"[seed={_active_seed}] {msg}"
        return True


logger = logging.getLogger(__name__)
formatting = logging.Formatter(
    "%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]"
)
seed_filter = SeedContextFilter()
logger.addFilter(seed_filter)

_handler_ready = False


def _ensure_handler() -> None:
    """Attach the rotating file handler on first use."""
    global _handler_ready
    if _handler_ready:
        return
    log_dir = os.path.join(WORK_PATH, "logs")
    try:
        os.makedirs(log_dir, exist_ok=True)
        handler = RotatingFileHandler(
            os.path.join(log_dir, LOG_FILE),
            maxBytes=1000000,
            backupCount=20,
        )
    except OSError:
        # read-only working directory: keep logging through the root logger
        handler = logging.NullHandler()
    handler.setFormatter(formatting)
    logger.addHandler(handler)
    _handler_ready = True


@contextmanager
def seed_context(seed: Optional[int]) -> Generator[None, None, None]:
    """Stamp log records emitted inside the block with ``seed``.

    :param seed: The seed of the run being executed
    """
    global _active_seed
    previous = _active_seed
    _active_seed = seed
    try:
        yield
    finally:
        _active_seed = previous


def add_log(message: str, level: str) -> None:
    """Write a log entry to the log file.

    :param message: The message to log
    :param level: Log level (debug, info, warning, error)

    :return: None

    Example::

        from isoprefs import add_log

        add_log("Built 100 trees", "debug")
        add_log("Window (0, 20) skipped", "warning")
    """
    _ensure_handler()
    level = level.lower()
    if level == "debug":
        logger.setLevel(logging.DEBUG)
        logger.debug(message)
    elif level == "error":
        logger.setLevel(logging.DEBUG)
        logger.error(message)
    elif level in ("warn", "warning"):
        logger.setLevel(logging.DEBUG)
        logger.warning(message)
    else:
        logger.setLevel(logging.DEBUG)
        logger.info(message)


def format_duration(seconds: float) -> str:
    """Format a wall time for log lines.

    :param seconds: Duration in seconds
    :return: Human readable duration, e.g. ``"1m 05.2s"`` or ``"312 ms"``
    """
    if seconds < 1.0:
        return f"{seconds * 1000:.0f} ms"
    if seconds < 60.0:
        return f"{seconds:.2f} s"
    minutes, rest = divmod(seconds, 60.0)
    return f"{int(minutes)}m {rest:04.1f}s"
