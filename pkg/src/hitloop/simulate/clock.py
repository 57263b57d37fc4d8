"""Virtual time source for deterministic runs."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from ..errors import Malformed


class VirtualClock:
    """Monotone virtual clock; callable, so it drops in wherever a wall
    clock closure is expected."""

    def __init__(self, start: datetime, tick: timedelta = timedelta(seconds=60)):
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        if tick <= timedelta(0):
            raise Malformed("tick must be positive")
        self._now = start
        self.tick = tick

    def now(self) -> datetime:
        return self._now

    def __call__(self) -> datetime:
        return self._now

    def advance(self, delta: timedelta | None = None) -> datetime:
        if delta is None:
            delta = self.tick
        if delta < timedelta(0):
            raise Malformed("cannot advance backwards")
        self._now += delta
        return self._now

    def advance_to(self, ts: datetime) -> datetime:
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        if ts < self._now:
            raise Malformed(f"cannot move clock backwards ({ts} < {self._now})")
        self._now = ts
        return self._now
