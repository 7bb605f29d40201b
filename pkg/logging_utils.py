"""Log setup for the command line: stderr only, timestamps in the configured zone."""
from __future__ import annotations

import logging
import os
import sys
from datetime import datetime, timezone
from typing import Optional

from time_utils import get_local_timezone

LOG_LEVEL_ENV = "DILATON_MONITOR_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S %Z%z"


class TimezoneFormatter(logging.Formatter):
    """Render ``asctime`` in ``tzinfo`` (ISO 8601 unless ``datefmt`` is given)."""

    def __init__(self, fmt: str | None = None, datefmt: str | None = None, *, tzinfo=None) -> None:
        super().__init__(fmt=fmt, datefmt=datefmt)
        self.tzinfo = tzinfo if tzinfo is not None else get_local_timezone()

    def formatTime(self, record: logging.LogRecord, datefmt: str | None = None) -> str:  # noqa: N802
        stamp = datetime.fromtimestamp(record.created, tz=timezone.utc).astimezone(self.tzinfo)
        return stamp.strftime(datefmt) if datefmt else stamp.isoformat(timespec="seconds")


def resolve_level(flag: str | None) -> int:
    """Level from ``--log-level``, then ``$DILATON_MONITOR_LOG_LEVEL``, then INFO."""

    name = (flag or os.getenv(LOG_LEVEL_ENV) or "INFO").strip().upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ValueError(f"unknown log level {name!r}")
    return level


_handler: Optional[logging.Handler] = None


def configure_logging(level: int = logging.INFO, fmt: Optional[str] = None) -> None:
    """Attach one stderr handler to the root logger.

    Repeated calls only change the root level; stdout stays reserved for reports.
    """
    global _handler
    root = logging.getLogger()
    root.setLevel(level)
    if _handler is not None:
        return

    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(TimezoneFormatter(fmt or LOG_FORMAT, LOG_DATEFMT))
    root.handlers.clear()
    root.addHandler(_handler)
