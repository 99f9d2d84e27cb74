"""Package logger setup."""

from __future__ import annotations

import logging

LOGGER_NAME = "fracmeasure"
LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"

_package_logger = logging.getLogger(LOGGER_NAME)
if not _package_logger.handlers:
    _handler = logging.StreamHandler()
    _handler.setFormatter(logging.Formatter(LOG_FORMAT))
    _package_logger.addHandler(_handler)
    _package_logger.setLevel(logging.WARNING)


def configure_logging(level: str | int = "WARNING") -> logging.Logger:
    """Set the package log level and return the package logger."""

    if isinstance(level, str):
        resolved = logging.getLevelName(level.upper())
        if not isinstance(resolved, int):
            raise ValueError(f"unknown log level {level!r}")
        level = resolved
    _package_logger.setLevel(level)
    return _package_logger
