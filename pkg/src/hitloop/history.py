"""Append-only history store fed by broker change notifications.

One series per (entity, attribute). Points arrive through `on_notification`
and are kept sorted by observation time with duplicate timestamps ignored,
so replaying a notification log is idempotent and order-insensitive. Raw
range queries page through a continuation token; aggregate queries bucket
by UTC hour / day / ISO week (weeks start Monday 00:00 UTC).

Categorical series support count and occurrences-per-label only, with one
carve-out: sleep-quality labels map to ordinals 1..5 so their mean is
defined for the feedback screens.
"""

from __future__ import annotations

import json
import os
import threading
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Any

from .broker import Notification
from .errors import Malformed, NonNumeric, UnknownSeries
from .events import iso, parse_iso

SLEEP_QUALITY_ORDINAL = {"very_bad": 1, "bad": 2, "neutral": 3, "good": 4, "very_good": 5}
ORDINAL_SLEEP_QUALITY = {v: k for k, v in SLEEP_QUALITY_ORDINAL.items()}

AGGREGATE_METHODS = ("min", "max", "sum", "mean", "count", "occurrences-per-label")
RESOLUTIONS = ("hour", "day", "week")


@dataclass(frozen=True)
class SeriesKey:
    entity_id: str
    attribute: str

    def __post_init__(self):
        if not self.entity_id or not self.attribute:
            raise Malformed("series key parts must be non-empty")


@dataclass(frozen=True)
class SeriesPoint:
    observed_at: datetime
    value: Any


def bucket_start(ts: datetime, resolution: str) -> datetime:
    ts = ts.astimezone(timezone.utc)
    if resolution == "hour":
        return ts.replace(minute=0, second=0, microsecond=0)
    day = ts.replace(hour=0, minute=0, second=0, microsecond=0)
    if resolution == "day":
        return day
    if resolution == "week":
        return day - timedelta(days=day.weekday())
    raise Malformed(f"unknown resolution {resolution!r}")


def _numeric(value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if isinstance(value, str) and value in SLEEP_QUALITY_ORDINAL:
            return float(SLEEP_QUALITY_ORDINAL[value])
        raise NonNumeric(f"value {value!r} is not numeric")
    return float(value)


class HistoryStore:
    """In-memory series index, optionally persisted as line-delimited JSON.

    On-disk layout: one directory per entity, one ``<attribute>.jsonl`` file
    per series, each line ``{"t": iso8601, "v": value}``.
    """

    def __init__(self, persist_dir: str | None = None):
        self._series: dict[SeriesKey, list[datetime]] = {}
        self._values: dict[SeriesKey, dict[datetime, Any]] = {}
        self._lock = threading.RLock()
        self._persist_dir = persist_dir
        if persist_dir:
            os.makedirs(persist_dir, exist_ok=True)
            self._load(persist_dir)

    # -- ingestion --------------------------------------------------------

    def on_notification(self, n: Notification) -> int:
        appended = 0
        with self._lock:
            for attr, av in n.attributes.items():
                key = SeriesKey(n.entity_id, attr)
                if self._append(key, av.observed_at, av.value):
                    appended += 1
        return appended

    def append_point(self, key: SeriesKey, point: SeriesPoint) -> bool:
        with self._lock:
            return self._append(key, point.observed_at, point.value)

    def _append(self, key: SeriesKey, ts: datetime, value: Any) -> bool:
        times = self._series.setdefault(key, [])
        values = self._values.setdefault(key, {})
        if ts in values:
            return False
        insort(times, ts)
        values[ts] = value
        if self._persist_dir:
            path = self._series_path(key)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"t": iso(ts), "v": value}, sort_keys=True) + "\n")
        return True

    # -- queries ----------------------------------------------------------

    def series_keys(self) -> list[SeriesKey]:
        with self._lock:
            return sorted(self._series, key=lambda k: (k.entity_id, k.attribute))

    def query_raw(
        self,
        key: SeriesKey,
        t_from: datetime,
        t_to: datetime,
        limit: int = 1000,
        token: str | None = None,
    ) -> tuple[list[SeriesPoint], str | None]:
        """Chronological points in [t_from, t_to), paged by ``limit``.

        Returns (points, continuation_token); the token is None when the
        range is exhausted.
        """
        if limit < 1:
            raise Malformed("limit must be >= 1")
        with self._lock:
            if key not in self._series:
                raise UnknownSeries(f"{key.entity_id}/{key.attribute}")
            times = self._series[key]
            values = self._values[key]
            lo = bisect_left(times, t_from)
            hi = bisect_left(times, t_to)
            offset = int(token) if token else 0
            window = times[lo + offset : hi]
            page = window[:limit]
            points = [SeriesPoint(ts, values[ts]) for ts in page]
            next_token = str(offset + limit) if len(window) > limit else None
            return points, next_token

    def query_aggregate(
        self,
        key: SeriesKey,
        t_from: datetime,
        t_to: datetime,
        method: str,
        resolution: str = "day",
    ) -> list[tuple[datetime, Any]]:
        if method not in AGGREGATE_METHODS:
            raise Malformed(f"unknown aggregate method {method!r}")
        if resolution not in RESOLUTIONS:
            raise Malformed(f"unknown resolution {resolution!r}")
        if not t_from < t_to:
            raise Malformed("range must satisfy from < to")
        with self._lock:
            if key not in self._series:
                raise UnknownSeries(f"{key.entity_id}/{key.attribute}")
            times = self._series[key]
            values = self._values[key]
            lo = bisect_left(times, t_from)
            hi = bisect_left(times, t_to)
            buckets: dict[datetime, list[Any]] = {}
            for ts in times[lo:hi]:
                buckets.setdefault(bucket_start(ts, resolution), []).append(values[ts])
        out = []
        for start in sorted(buckets):
            vals = buckets[start]
            if method == "count":
                out.append((start, len(vals)))
            elif method == "occurrences-per-label":
                counts: dict[str, int] = {}
                for v in vals:
                    counts[str(v)] = counts.get(str(v), 0) + 1
                out.append((start, counts))
            else:
                nums = [_numeric(v) for v in vals]
                if method == "min":
                    out.append((start, min(nums)))
                elif method == "max":
                    out.append((start, max(nums)))
                elif method == "sum":
                    out.append((start, sum(nums)))
                elif method == "mean":
                    out.append((start, sum(nums) / len(nums)))
        return out

    def last_value_at(self, key: SeriesKey, at: datetime) -> SeriesPoint | None:
        """Most recent point with observed_at <= at, if any."""
        with self._lock:
            if key not in self._series:
                return None
            times = self._series[key]
            idx = bisect_right(times, at)
            if idx == 0:
                return None
            ts = times[idx - 1]
            return SeriesPoint(ts, self._values[key][ts])

    # -- persistence ------------------------------------------------------

    def _series_path(self, key: SeriesKey) -> str:
        return os.path.join(self._persist_dir, key.entity_id, key.attribute + ".jsonl")

    def _load(self, root: str) -> None:
        for entity_id in sorted(os.listdir(root)):
            edir = os.path.join(root, entity_id)
            if not os.path.isdir(edir):
                continue
            for fname in sorted(os.listdir(edir)):
                if not fname.endswith(".jsonl"):
                    continue
                key = SeriesKey(entity_id, fname[: -len(".jsonl")])
                with open(os.path.join(edir, fname), "r", encoding="utf-8") as fh:
                    for line in fh:
                        line = line.strip()
                        if not line:
                            continue
                        doc = json.loads(line)
                        ts = parse_iso(doc["t"])
                        times = self._series.setdefault(key, [])
                        values = self._values.setdefault(key, {})
                        if ts not in values:
                            insort(times, ts)
                            values[ts] = doc["v"]
