"""Injected clock interface.

Protocol timing (72h challenge windows, 14-day correction deadlines,
voting periods, timelocks) always reads time from a Clock instance.
Production uses UTC wall time; tests and the simulator use VirtualClock
at one-hour granularity.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> datetime: ...


class SystemClock:
    """Wall-clock UTC time."""

    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class VirtualClock:
    """Deterministic clock advanced explicitly, one-hour granularity."""

    def __init__(self, start: datetime):
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        self._now = start

    def now(self) -> datetime:
        return self._now

    def advance_hours(self, hours: int) -> datetime:
        if hours < 0:
            raise ValueError("clock cannot move backwards")
        self._now += timedelta(hours=hours)
        return self._now

    def advance_days(self, days: int) -> datetime:
        return self.advance_hours(days * 24)
