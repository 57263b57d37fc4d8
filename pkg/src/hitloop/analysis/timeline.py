"""Curated timeline of pandemic-related public events and the derived
positiveness index.

Each event carries a sign: +1 for developments that relieve restrictions
or report improvement, -1 for tightened measures or worsening numbers.
The positiveness index at a date is the running sum of signs of all events
strictly before that date, so the index reflects the situation a person
woke up to, not news that might break later the same day.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date as Date
from importlib import resources
from pathlib import Path

from ..errors import Malformed, ParseError

_SIGNS = {"+1": 1, "1": 1, "+": 1, "-1": -1, "-": -1}


@dataclass(frozen=True)
class TimelineEvent:
    date: Date
    sign: int
    description: str = ""


class EventTable:
    """Date-ordered event list with strictly increasing, unique dates."""

    def __init__(self, events: list[TimelineEvent]):
        dates = [e.date for e in events]
        if len(set(dates)) != len(dates):
            raise Malformed("event dates must be unique")
        if dates != sorted(dates):
            raise Malformed("events must be listed in ascending date order")
        for e in events:
            if e.sign not in (-1, 1):
                raise Malformed(f"event sign must be +1 or -1, got {e.sign}")
        self.events = list(events)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @classmethod
    def load(cls, path: str | Path) -> "EventTable":
        events: list[TimelineEvent] = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "date" not in reader.fieldnames or "sign" not in reader.fieldnames:
                raise ParseError("expected header with date,sign[,description]", line=1)
            for lineno, row in enumerate(reader, start=2):
                raw_date = (row.get("date") or "").strip()
                raw_sign = (row.get("sign") or "").strip()
                try:
                    day = Date.fromisoformat(raw_date)
                except ValueError:
                    raise ParseError(f"bad date {raw_date!r}", line=lineno) from None
                if raw_sign not in _SIGNS:
                    raise ParseError(f"bad sign {raw_sign!r}", line=lineno)
                events.append(TimelineEvent(day, _SIGNS[raw_sign], (row.get("description") or "").strip()))
        return cls(events)

    @classmethod
    def default(cls) -> "EventTable":
        ref = resources.files("hitloop.data") / "pandemic_events.csv"
        with resources.as_file(ref) as path:
            return cls.load(path)


def positiveness_index(events: EventTable | list[TimelineEvent], day: Date) -> int:
    """Sum of event signs strictly before ``day``."""
    return sum(e.sign for e in events if e.date < day)
