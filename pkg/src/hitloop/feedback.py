"""Feedback computation and delivery.

Participants are split into a control and an active group by the parity of
their hashed user id. Every 30 minutes the granter recomputes rolling
window metrics (24 hours, 4 days, 8 days) from the history store, and each
Saturday at 21:00 it composes a weekly report covering the preceding seven
days. Control-group output never carries the active-only fields (municipal
risk, contact and outing statistics, transport shares); that exclusion is
enforced at serialization, not left to callers.

Weekly report wording comes from an externalized template file keyed by
(group, metric, polarity) so the texts can be revised without touching
code.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

from .broker import AttributeValue, ContextEntity
from .errors import Malformed, NotFound, UnknownSeries
from .events import iso, parse_iso
from .history import (
    ORDINAL_SLEEP_QUALITY,
    SLEEP_QUALITY_ORDINAL,
    HistoryStore,
    SeriesKey,
    SeriesPoint,
)
from .risk import MunicipalRiskLevel

log = logging.getLogger(__name__)

RECOMPUTE_EVERY = timedelta(minutes=30)
WEEKLY_WEEKDAY = 5  # Saturday
WEEKLY_HOUR = 21

WINDOWS: dict[str, timedelta] = {
    "last_24h": timedelta(days=1),
    "last_4d": timedelta(days=4),
    "last_8d": timedelta(days=8),
}

CONTACTS_RECOMMENDED_MAX = 10  # weekly contacts above this flip the message
MOBILITY_RECOMMENDED_MINUTES = 60.0  # mean outing minutes at or above flip

MEASURES_URL = "https://covid19estamoson.gov.pt"


class FeedbackGroup(str, Enum):
    CONTROL = "control"
    ACTIVE = "active"


def assign_group(user_id: str) -> FeedbackGroup:
    """Deterministic split on the parity of the SHA-256 of the user id."""
    if not user_id:
        raise Malformed("empty user id")
    digest = int(hashlib.sha256(user_id.encode("utf-8")).hexdigest(), 16)
    return FeedbackGroup.CONTROL if digest % 2 == 0 else FeedbackGroup.ACTIVE


# -- window metrics --------------------------------------------------------

ACTIVE_ONLY_FIELDS = (
    "municipal_risk",
    "contacts_mean",
    "outings_count",
    "outings_mean_minutes",
    "transport_pct",
)


@dataclass
class WindowMetrics:
    user: str
    group: FeedbackGroup
    window: str
    computed_at: datetime
    activity_pct: dict[str, float] | None = None
    sleep_mean_hours: float | None = None
    sleep_quality_mean: float | None = None
    sleep_quality_label: str | None = None
    valence_mean: float | None = None
    arousal_mean: float | None = None
    municipal_risk: MunicipalRiskLevel | None = None
    contacts_mean: float | None = None
    outings_count: int | None = None
    outings_mean_minutes: float | None = None
    transport_pct: dict[str, float] | None = None

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "user": self.user,
            "group": self.group.value,
            "window": self.window,
            "computed_at": iso(self.computed_at),
        }
        for name in ("activity_pct", "sleep_mean_hours", "sleep_quality_mean",
                     "sleep_quality_label", "valence_mean", "arousal_mean"):
            value = getattr(self, name)
            if value is not None:
                doc[name] = value
        if self.group is FeedbackGroup.ACTIVE:
            for name in ACTIVE_ONLY_FIELDS:
                value = getattr(self, name)
                if value is None:
                    continue
                doc[name] = value.value if isinstance(value, MunicipalRiskLevel) else value
        return doc


@dataclass(frozen=True)
class Outing:
    start: datetime
    end: datetime
    started_in_window: bool

    @property
    def minutes(self) -> float:
        return (self.end - self.start).total_seconds() / 60.0


def derive_outings(
    points: list[SeriesPoint],
    window_start: datetime,
    window_end: datetime,
    initial: str | None = None,
) -> list[Outing]:
    """Episodes spent away from home within [window_start, window_end).

    ``points`` is the discrete location series ("home"/"other"); ``initial``
    is the location just before the window opens. An episode already under
    way at window start is clipped to the window and flagged as not started
    inside it, so callers can count departures without losing its duration.
    """
    outings: list[Outing] = []
    state = initial or "home"
    open_start = window_start if state == "other" else None
    started_inside = False
    for p in sorted(points, key=lambda q: q.observed_at):
        if not window_start <= p.observed_at < window_end:
            continue
        label = str(p.value)
        if label == "other" and open_start is None:
            open_start = p.observed_at
            started_inside = True
        elif label == "home" and open_start is not None:
            outings.append(Outing(open_start, p.observed_at, started_inside))
            open_start = None
            started_inside = False
    if open_start is not None and window_end > open_start:
        outings.append(Outing(open_start, window_end, started_inside))
    return outings


# -- weekly report ---------------------------------------------------------

@dataclass
class WeeklyReport:
    user: str
    group: FeedbackGroup
    week_start: datetime
    week_end: datetime
    contacts_estimate: int
    contacts_polarity: str
    contacts_message: str
    mobility_mean_minutes: float
    mobility_polarity: str
    mobility_message: str
    risk_message: str
    measures_message: str
    notes: list[str] = field(default_factory=list)

    def to_doc(self) -> dict[str, Any]:
        return {
            "user": self.user,
            "group": self.group.value,
            "week_start": iso(self.week_start),
            "week_end": iso(self.week_end),
            "contacts_estimate": self.contacts_estimate,
            "contacts_polarity": self.contacts_polarity,
            "contacts_message": self.contacts_message,
            "mobility_mean_minutes": self.mobility_mean_minutes,
            "mobility_polarity": self.mobility_polarity,
            "mobility_message": self.mobility_message,
            "risk_message": self.risk_message,
            "measures_message": self.measures_message,
            "notes": list(self.notes),
        }


_KEY_RE = re.compile(r"^(?P<key>[a-z_]+\.[a-z_]+\.[a-z_]+)\s*:\s*(?P<text>.+)$")


class MessageTemplates:
    """Weekly report texts keyed by ``group.metric.polarity``.

    File format is one template per line, ``key: text``, with ``<N>`` as
    the numeric placeholder; blank lines and ``#`` comments are ignored.
    """

    def __init__(self, entries: dict[tuple[str, str, str], str]):
        self._entries = dict(entries)

    @classmethod
    def load(cls, path: str | Path) -> "MessageTemplates":
        entries: dict[tuple[str, str, str], str] = {}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            m = _KEY_RE.match(line)
            if not m:
                raise Malformed(f"bad template line: {line!r}")
            group, metric, polarity = m.group("key").split(".")
            entries[(group, metric, polarity)] = m.group("text")
        return cls(entries)

    @classmethod
    def default(cls) -> "MessageTemplates":
        ref = resources.files("hitloop.data") / "feedback_messages.txt"
        with resources.as_file(ref) as path:
            return cls.load(path)

    def render(self, group: str, metric: str, polarity: str, n: Any = None) -> str:
        key = (group, metric, polarity)
        if key not in self._entries:
            raise NotFound(f"no template for {'.'.join(key)}")
        text = self._entries[key]
        if "<N>" in text:
            if n is None:
                raise Malformed(f"template {'.'.join(key)} needs a value for <N>")
            text = text.replace("<N>", str(n))
        return text


def weekly_boundary_at_or_before(now: datetime) -> datetime:
    """Most recent Saturday 21:00 UTC at or before ``now``."""
    candidate = now.replace(hour=WEEKLY_HOUR, minute=0, second=0, microsecond=0)
    days_back = (candidate.weekday() - WEEKLY_WEEKDAY) % 7
    candidate -= timedelta(days=days_back)
    if candidate > now:
        candidate -= timedelta(days=7)
    return candidate


# -- granter ---------------------------------------------------------------

class FeedbackGranter:
    """Computes rolling feedback and weekly reports from the history store."""

    def __init__(
        self,
        history: HistoryStore,
        broker=None,
        templates: MessageTemplates | None = None,
        phase: str = "intervention",
        risk_of: Callable[[str, datetime], MunicipalRiskLevel | None] | None = None,
    ):
        self.history = history
        self.broker = broker
        self.templates = templates or MessageTemplates.default()
        self.phase = phase
        self._risk_of = risk_of
        self._users: list[str] = []
        self._next_recompute: datetime | None = None
        self._last_weekly: dict[str, datetime] = {}
        self._snapshots: dict[tuple[str, str], WindowMetrics] = {}
        self._weeklies: dict[str, WeeklyReport] = {}

    def track_user(self, user: str) -> None:
        if user not in self._users:
            self._users.append(user)

    @property
    def users(self) -> list[str]:
        return list(self._users)

    def group_of(self, user: str) -> FeedbackGroup:
        return assign_group(user)

    # -- data access helpers ---------------------------------------------

    def _points(self, user: str, attribute: str, t_from: datetime, t_to: datetime) -> list[SeriesPoint]:
        key = SeriesKey(user, attribute)
        try:
            points, _ = self.history.query_raw(key, t_from=t_from, t_to=t_to, limit=100_000)
        except UnknownSeries:
            return []
        return [p for p in points if p.observed_at < t_to]

    def _numeric_mean(self, user: str, attribute: str, t_from: datetime, t_to: datetime) -> float | None:
        values = [float(p.value) for p in self._points(user, attribute, t_from, t_to)
                  if isinstance(p.value, (int, float)) and not isinstance(p.value, bool)]
        return sum(values) / len(values) if values else None

    def _latest_risk(self, user: str, now: datetime) -> MunicipalRiskLevel | None:
        if self._risk_of is not None:
            return self._risk_of(user, now)
        try:
            point = self.history.last_value_at(SeriesKey(user, "geo_risk"), now)
        except UnknownSeries:
            return None
        if point is None:
            return None
        try:
            return MunicipalRiskLevel(str(point.value))
        except ValueError:
            return None

    def _location_before(self, user: str, at: datetime) -> str | None:
        try:
            point = self.history.last_value_at(SeriesKey(user, "location"), at - timedelta(microseconds=1))
        except UnknownSeries:
            return None
        return None if point is None else str(point.value)

    def _daily_contact_sums(self, user: str, t_from: datetime, t_to: datetime) -> dict[str, int]:
        sums: dict[str, int] = {}
        for p in self._points(user, "reported_contacts", t_from, t_to):
            if isinstance(p.value, bool) or not isinstance(p.value, (int, float)):
                continue
            day = p.observed_at.date().isoformat()
            sums[day] = sums.get(day, 0) + int(p.value)
        return sums

    def _outings(self, user: str, t_from: datetime, t_to: datetime) -> list[Outing]:
        points = self._points(user, "location", t_from, t_to)
        initial = self._location_before(user, t_from)
        return derive_outings(points, t_from, t_to, initial=initial)

    def _transport_shares(self, user: str, t_from: datetime, t_to: datetime) -> dict[str, float] | None:
        answers = self._points(user, "transport_answer", t_from, t_to)
        latest_per_trip: dict[str, tuple[datetime, str]] = {}
        for p in answers:
            if not isinstance(p.value, dict):
                continue
            trip = str(p.value.get("trip_id", ""))
            transport = str(p.value.get("transport", ""))
            if not trip or not transport:
                continue
            prev = latest_per_trip.get(trip)
            if prev is None or p.observed_at >= prev[0]:
                latest_per_trip[trip] = (p.observed_at, transport)
        if not latest_per_trip:
            return None
        # trip durations from episode records (timestamped at episode end, so
        # look back far enough to catch episodes that started before t_from)
        seconds_per_trip: dict[str, float] = {}
        for p in self._points(user, "trip_episode", t_from - timedelta(hours=12), t_to):
            if not isinstance(p.value, dict):
                continue
            trip = str(p.value.get("trip_id", ""))
            if trip in latest_per_trip:
                seconds_per_trip[trip] = seconds_per_trip.get(trip, 0.0) + float(p.value.get("seconds", 0.0))
        weights: dict[str, float] = {}
        for trip, (_, transport) in latest_per_trip.items():
            weights[transport] = weights.get(transport, 0.0) + seconds_per_trip.get(trip, 0.0)
        total = sum(weights.values())
        if total <= 0:
            # answered trips with no duration records: equal weighting
            counts: dict[str, float] = {}
            for _, transport in latest_per_trip.values():
                counts[transport] = counts.get(transport, 0.0) + 1.0
            total = sum(counts.values())
            weights = counts
        return {t: round(100.0 * w / total, 2) for t, w in sorted(weights.items())}

    # -- window metrics ---------------------------------------------------

    def compute_window_metrics(self, user: str, window: str, now: datetime) -> WindowMetrics:
        if window not in WINDOWS:
            raise Malformed(f"unknown window {window!r} (expected one of {sorted(WINDOWS)})")
        span = WINDOWS[window]
        t_from = now - span
        group = assign_group(user)
        metrics = WindowMetrics(user=user, group=group, window=window, computed_at=now)

        window_seconds = span.total_seconds()
        shares: dict[str, float] = {}
        for p in self._points(user, "activity_segment", t_from - timedelta(hours=36), now):
            if not isinstance(p.value, dict):
                continue
            try:
                seg_start = parse_iso(p.value["start"])
                seg_end = parse_iso(p.value["end"])
                label = str(p.value["label"])
            except (KeyError, ValueError):
                continue
            overlap = (min(seg_end, now) - max(seg_start, t_from)).total_seconds()
            if overlap > 0:
                shares[label] = shares.get(label, 0.0) + overlap
        if shares:
            metrics.activity_pct = {
                label: round(100.0 * s / window_seconds, 2) for label, s in sorted(shares.items())
            }

        metrics.sleep_mean_hours = _round_opt(self._numeric_mean(user, "sleep_hours", t_from, now))
        quality_points = self._points(user, "sleep_quality", t_from, now)
        ordinals = [SLEEP_QUALITY_ORDINAL[str(p.value)] for p in quality_points
                    if str(p.value) in SLEEP_QUALITY_ORDINAL]
        if ordinals:
            mean_q = sum(ordinals) / len(ordinals)
            metrics.sleep_quality_mean = round(mean_q, 4)
            metrics.sleep_quality_label = ORDINAL_SLEEP_QUALITY[min(5, max(1, int(mean_q + 0.5)))]
        metrics.valence_mean = _round_opt(self._numeric_mean(user, "valence", t_from, now))
        metrics.arousal_mean = _round_opt(self._numeric_mean(user, "arousal", t_from, now))

        if group is FeedbackGroup.ACTIVE:
            metrics.municipal_risk = self._latest_risk(user, now)
            daily = self._daily_contact_sums(user, t_from, now)
            if daily:
                metrics.contacts_mean = round(sum(daily.values()) / len(daily), 4)
            outings = self._outings(user, t_from, now)
            metrics.outings_count = sum(1 for o in outings if o.started_in_window)
            if outings:
                metrics.outings_mean_minutes = round(
                    sum(o.minutes for o in outings) / len(outings), 4
                )
            metrics.transport_pct = self._transport_shares(user, t_from, now)

        self._snapshots[(user, window)] = metrics
        return metrics

    # -- weekly reports ---------------------------------------------------

    def compose_weekly_report(self, user: str, week_end: datetime) -> WeeklyReport:
        if week_end.weekday() != WEEKLY_WEEKDAY or (week_end.hour, week_end.minute) != (WEEKLY_HOUR, 0):
            raise Malformed(f"week_end must be a Saturday {WEEKLY_HOUR:02d}:00, got {iso(week_end)}")
        week_start = week_end - timedelta(days=7)
        group = assign_group(user)
        g = group.value
        notes: list[str] = []

        contact_points = self._points(user, "reported_contacts", week_start, week_end)
        contacts = sum(int(p.value) for p in contact_points
                       if isinstance(p.value, (int, float)) and not isinstance(p.value, bool))
        if not contact_points:
            notes.append("no proximity reports this week; contact estimate defaults to 0")
        else:
            notes.append(f"contact estimate from {len(contact_points)} proximity reports")
        contacts_polarity = "positive" if contacts <= CONTACTS_RECOMMENDED_MAX else "negative"
        contacts_message = self.templates.render(g, "contacts", contacts_polarity, n=contacts)

        outings = self._outings(user, week_start, week_end)
        if outings:
            mobility_mean = sum(o.minutes for o in outings) / len(outings)
            notes.append(f"mobility estimate from {len(outings)} outings")
        else:
            mobility_mean = 0.0
            notes.append("no outings detected this week")
        mobility_polarity = "positive" if mobility_mean < MOBILITY_RECOMMENDED_MINUTES else "negative"
        mobility_message = self.templates.render(g, "mobility", mobility_polarity,
                                                 n=round(mobility_mean, 1))

        if group is FeedbackGroup.ACTIVE:
            level = self._latest_risk(user, week_end)
            label = level.value.replace("_", " ") if level is not None else "unknown"
            risk_message = self.templates.render(g, "risk", "info", n=label)
        else:
            risk_message = self.templates.render(g, "risk", "info")
        measures_message = self.templates.render("common", "measures", "info", n=MEASURES_URL)

        report = WeeklyReport(
            user=user,
            group=group,
            week_start=week_start,
            week_end=week_end,
            contacts_estimate=contacts,
            contacts_polarity=contacts_polarity,
            contacts_message=contacts_message,
            mobility_mean_minutes=round(mobility_mean, 4),
            mobility_polarity=mobility_polarity,
            mobility_message=mobility_message,
            risk_message=risk_message,
            measures_message=measures_message,
            notes=notes,
        )
        self._weeklies[user] = report
        return report

    # -- cadence ----------------------------------------------------------

    def on_tick(self, now: datetime) -> list[dict[str, Any]]:
        """Advance the 30-minute recompute cadence and the weekly boundary.

        Returns the documents published this tick. When the caller ticks
        less often than the cadence, only the latest due recompute runs;
        skipped intermediate snapshots would be superseded immediately and
        are not backfilled. Weekly reports are never skipped.
        """
        if self.phase == "baseline":
            return []
        published: list[dict[str, Any]] = []
        if self._next_recompute is None:
            self._next_recompute = _ceil_to_cadence(now)
        if now >= self._next_recompute:
            boundary = _floor_to_cadence(now)
            for user in self._users:
                for window in WINDOWS:
                    metrics = self.compute_window_metrics(user, window, boundary)
                    published.append(self._publish_snapshot(metrics))
            self._next_recompute = boundary + RECOMPUTE_EVERY
        weekly_due = weekly_boundary_at_or_before(now)
        for user in self._users:
            last = self._last_weekly.get(user)
            if (last is None or weekly_due > last) and weekly_due <= now:
                if self._has_history_before(user, weekly_due):
                    report = self.compose_weekly_report(user, weekly_due)
                    self._last_weekly[user] = weekly_due
                    published.append(self._publish_weekly(report))
                else:
                    self._last_weekly[user] = weekly_due
        return published

    def recompute_loop(self, ticks: Iterable[datetime]) -> Iterator[list[dict[str, Any]]]:
        for now in ticks:
            yield self.on_tick(now)

    def _has_history_before(self, user: str, at: datetime) -> bool:
        for attribute in ("reported_contacts", "location", "valence"):
            try:
                if self.history.last_value_at(SeriesKey(user, attribute), at) is not None:
                    return True
            except UnknownSeries:
                continue
        return False

    def _publish_snapshot(self, metrics: WindowMetrics) -> dict[str, Any]:
        doc = metrics.to_doc()
        if self.broker is not None:
            self.broker.upsert_entity(ContextEntity(
                id=f"feedback-{metrics.user}",
                entity_type="FeedbackSnapshot",
                attributes={metrics.window: AttributeValue(doc, metrics.computed_at)},
            ))
        return doc

    def _publish_weekly(self, report: WeeklyReport) -> dict[str, Any]:
        doc = report.to_doc()
        if self.broker is not None:
            self.broker.upsert_entity(ContextEntity(
                id=f"weekly-{report.user}",
                entity_type="WeeklyReport",
                attributes={"report": AttributeValue(doc, report.week_end)},
            ))
        return doc

    def latest_snapshot(self, user: str, window: str) -> WindowMetrics | None:
        return self._snapshots.get((user, window))

    def latest_weekly(self, user: str) -> WeeklyReport | None:
        return self._weeklies.get(user)


def _round_opt(value: float | None, digits: int = 4) -> float | None:
    return None if value is None else round(value, digits)


def _floor_to_cadence(now: datetime) -> datetime:
    minute = 30 if now.minute >= 30 else 0
    return now.replace(minute=minute, second=0, microsecond=0)


def _ceil_to_cadence(now: datetime) -> datetime:
    floored = _floor_to_cadence(now)
    return floored if floored == now else floored + RECOMPUTE_EVERY
