"""Daily series construction: per-user daily means, period and work/leisure
splits, app usage aggregation, purpose shares, and the contact estimate
that fuses proximity reports with transport occupancy answers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date as Date
from datetime import datetime, time, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import Malformed, ParseError

PERIOD_CUT = Date(2021, 3, 23)  # first reopening-plan week; boundary day goes after

# Weekday working blocks (UTC): mornings and afternoons around a lunch break.
WORK_BLOCKS = ((time(8, 0), time(12, 0)), (time(14, 0), time(18, 0)))

# Occupancy bucket -> representative passenger count used when transport
# answers are folded into the daily contact estimate. Private vehicles
# report exact small counts; shared transport reports a range midpoint.
BUCKET_REPRESENTATIVE: dict[tuple[str, str], int] = {}
for _t in ("own_car", "friend_vehicle", "taxi_tvde"):
    BUCKET_REPRESENTATIVE.update({(_t, "0"): 0, (_t, "1"): 1, (_t, "2"): 2, (_t, ">2"): 3})
for _t in ("bus", "subway_train_tram"):
    BUCKET_REPRESENTATIVE.update({(_t, "<10"): 5, (_t, "10-20"): 15, (_t, "20-30"): 25, (_t, ">30"): 35})
BUCKET_REPRESENTATIVE.update({("boat", "<10"): 5, ("boat", "10-30"): 20, ("boat", "30-50"): 40, ("boat", ">50"): 55})


def daily_mean_by_user(records: Iterable[tuple[str, datetime, float]]) -> dict[Date, float]:
    """Two-stage daily mean: first within each (user, day), then across the
    users that reported that day. Keeps heavy reporters from dominating."""
    per_user_day: dict[tuple[str, Date], list[float]] = {}
    for user, ts, value in records:
        per_user_day.setdefault((user, ts.date()), []).append(float(value))
    per_day: dict[Date, list[float]] = {}
    for (user, day), values in per_user_day.items():
        per_day.setdefault(day, []).append(sum(values) / len(values))
    return {day: sum(v) / len(v) for day, v in sorted(per_day.items())}


def split_periods(
    series: Mapping[Date, float], cut: Date = PERIOD_CUT
) -> tuple[dict[Date, float], dict[Date, float]]:
    """Split a daily series at the cut date; the cut day itself lands in
    the second (after) part."""
    before = {d: v for d, v in series.items() if d < cut}
    after = {d: v for d, v in series.items() if d >= cut}
    return before, after


def work_overlap_seconds(start: datetime, end: datetime) -> float:
    """Seconds of [start, end) falling inside weekday working blocks."""
    if end <= start:
        return 0.0
    start = start.astimezone(timezone.utc)
    end = end.astimezone(timezone.utc)
    total = 0.0
    day = start.date()
    while day <= end.date():
        if day.weekday() < 5:
            for block_start, block_end in WORK_BLOCKS:
                b0 = datetime.combine(day, block_start, tzinfo=timezone.utc)
                b1 = datetime.combine(day, block_end, tzinfo=timezone.utc)
                overlap = (min(end, b1) - max(start, b0)).total_seconds()
                if overlap > 0:
                    total += overlap
        day += timedelta(days=1)
    return total


def work_split(
    sessions: Iterable[tuple[str, datetime, datetime]],
) -> dict[str, tuple[float, float]]:
    """Per-package (work_minutes, nonwork_minutes) from usage sessions.

    A session straddling a block boundary is split proportionally to the
    time spent on each side, so work + nonwork always equals the session
    length exactly.
    """
    out: dict[str, tuple[float, float]] = {}
    for package, start, end in sessions:
        if end < start:
            raise Malformed(f"session for {package} ends before it starts")
        total = (end - start).total_seconds()
        work = work_overlap_seconds(start, end)
        prev_work, prev_non = out.get(package, (0.0, 0.0))
        out[package] = (prev_work + work / 60.0, prev_non + (total - work) / 60.0)
    return out


def purpose_percentages(
    answers: Iterable[Mapping[str, str]],
) -> dict[str, dict[str, float]]:
    """Share of declared purposes per package, in percent (sums to 100)."""
    counts: dict[str, dict[str, int]] = {}
    for ans in answers:
        for package, purpose in ans.items():
            counts.setdefault(package, {}).setdefault(purpose, 0)
            counts[package][purpose] += 1
    out: dict[str, dict[str, float]] = {}
    for package, by_purpose in sorted(counts.items()):
        total = sum(by_purpose.values())
        out[package] = {
            purpose: round(100.0 * n / total, 2) for purpose, n in sorted(by_purpose.items())
        }
    return out


class AppCategoryMap:
    """Package-to-category lookup; unmapped packages pass through under
    their own name, so the mapping is total without hiding anything."""

    def __init__(self, mapping: dict[str, str]):
        self._mapping = dict(mapping)

    @classmethod
    def load(cls, path: str | Path) -> "AppCategoryMap":
        mapping: dict[str, str] = {}
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "package" not in reader.fieldnames or "category" not in reader.fieldnames:
                raise ParseError("expected header with package,category", line=1)
            for lineno, row in enumerate(reader, start=2):
                package = (row.get("package") or "").strip()
                category = (row.get("category") or "").strip()
                if not package or not category:
                    raise ParseError("empty package or category", line=lineno)
                mapping[package] = category
        return cls(mapping)

    @classmethod
    def default(cls) -> "AppCategoryMap":
        ref = resources.files("hitloop.data") / "app_categories.csv"
        with resources.as_file(ref) as path:
            return cls.load(path)

    def category_of(self, package: str) -> str:
        return self._mapping.get(package, package)

    def categories(self) -> list[str]:
        return sorted(set(self._mapping.values()))

    def packages(self) -> list[str]:
        return sorted(self._mapping)


def aggregate_app_usage(
    records: Iterable[tuple[str, Date, str, float]],
    categories: AppCategoryMap,
    users: set[str],
    days: list[Date] | None = None,
) -> dict[str, float]:
    """Mean foreground minutes per user per day, by category.

    Users who never open an app in a category contribute zero for it on
    every day, which is why the denominator is the full user-day grid and
    not just the observed records.
    """
    if not users:
        raise Malformed("empty user set")
    rows = [(u, d, p, m) for u, d, p, m in records if u in users]
    if days is None:
        if not rows:
            return {}
        lo = min(d for _, d, _, _ in rows)
        hi = max(d for _, d, _, _ in rows)
        days = [lo + timedelta(n) for n in range((hi - lo).days + 1)]
    if not days:
        raise Malformed("empty day list")
    totals: dict[str, float] = {}
    day_set = set(days)
    for user, day, package, minutes in rows:
        if day not in day_set:
            continue
        cat = categories.category_of(package)
        totals[cat] = totals.get(cat, 0.0) + float(minutes)
    denominator = len(users) * len(days)
    return {cat: total / denominator for cat, total in sorted(totals.items())}


def fuse_daily_contacts(
    proximity: Iterable[tuple[str, datetime, int]],
    transport: Iterable[tuple[str, datetime, str, str]],
) -> dict[tuple[str, Date], int]:
    """Daily contact estimate per (user, day): summed proximity reports
    plus a representative passenger count per answered transport trip.

    Transport rows are expected deduplicated (one per trip); unknown
    (transport, bucket) pairs are a data error, not a zero.
    """
    out: dict[tuple[str, Date], int] = {}
    for user, ts, count in proximity:
        key = (user, ts.date())
        out[key] = out.get(key, 0) + int(count)
    for user, ts, transport_type, bucket in transport:
        rep = BUCKET_REPRESENTATIVE.get((transport_type, bucket))
        if rep is None:
            raise Malformed(f"unknown transport bucket {(transport_type, bucket)!r}")
        key = (user, ts.date())
        out[key] = out.get(key, 0) + rep
    return out
