"""Timezone lookup for log timestamps."""
from __future__ import annotations

import logging
import os
from datetime import datetime, timezone

try:
    from zoneinfo import ZoneInfo, ZoneInfoNotFoundError
except Exception:  # pragma: no cover - zoneinfo always available on Py3.9+
    ZoneInfo = None  # type: ignore
    ZoneInfoNotFoundError = KeyError  # type: ignore

LOGGER = logging.getLogger(__name__)

TIMEZONE_ENV = "DILATON_MONITOR_TZ"


def get_local_timezone():
    """Return ``$DILATON_MONITOR_TZ``, else the system timezone, else UTC."""
    override = os.getenv(TIMEZONE_ENV)
    if override and ZoneInfo is not None:
        try:
            return ZoneInfo(override)
        except (ZoneInfoNotFoundError, ValueError):
            LOGGER.warning("未知时区 %s，改用系统时区", override)
    tzinfo = datetime.now().astimezone().tzinfo
    if tzinfo is not None:
        return tzinfo
    return timezone.utc
