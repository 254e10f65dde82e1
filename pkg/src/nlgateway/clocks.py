"""Injectable clocks so TTL and "today" resolution are testable."""
from __future__ import annotations

import datetime as dt
import time


class SystemClock:
    def now(self) -> float:
        return time.time()

    def today(self) -> dt.date:
        return dt.date.today()


class FakeClock:
    """Manually advanced clock for tests."""

    def __init__(self, start: float = 1_700_000_000.0,
                 today: dt.date | None = None):
        self._now = start
        self._today = today or dt.date(2024, 1, 15)

    def now(self) -> float:
        return self._now

    def today(self) -> dt.date:
        return self._today

    def advance(self, seconds: float) -> None:
        self._now += seconds

    def set_today(self, day: dt.date) -> None:
        self._today = day
