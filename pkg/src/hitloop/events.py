"""Canonical sensing event envelope.

Every sensing output, questionnaire answer and watch sample travels in one
envelope: ``{user, kind, payload, t}``. The envelope is what device
pipelines hand to the ingest gateway and what the simulator writes to its
line-delimited event log.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any


def iso(ts: datetime) -> str:
    """UTC ISO-8601 with second precision; naive datetimes are taken as UTC."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat(timespec="seconds")


def parse_iso(text: str) -> datetime:
    # Accept the trailing-Z UTC designator that JavaScript clients emit;
    # fromisoformat only learned it in Python 3.11.
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class SensorEvent:
    user: str
    kind: str
    payload: Any
    t: datetime
    meta: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {"user": self.user, "kind": self.kind, "payload": self.payload, "t": iso(self.t)}
        if self.meta:
            doc["meta"] = self.meta
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "SensorEvent":
        doc = json.loads(line)
        return cls(
            user=doc["user"],
            kind=doc["kind"],
            payload=doc["payload"],
            t=parse_iso(doc["t"]),
            meta=doc.get("meta", {}),
        )


def write_event_log(path, events) -> int:
    """Append events to a line-delimited JSON log; returns the count written."""
    n = 0
    with open(path, "a", encoding="utf-8") as fh:
        for ev in events:
            fh.write(ev.to_json() + "\n")
            n += 1
    return n


def read_event_log(path):
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield SensorEvent.from_json(line)
