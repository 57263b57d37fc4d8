"""End-to-end offline report over a recorded run.

Reads the line-delimited event log a simulation (or a live deployment
export) produced, assembles daily behavior series, joins them with the
daily epidemic dataset and the public-event timeline, and writes usage
tables, purpose shares and lagged correlation matrices to an output
directory.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable

from ..errors import InvalidInput, Malformed
from ..events import parse_iso, read_event_log
from ..history import SLEEP_QUALITY_ORDINAL
from ..risk import EpiSnapshot, load_covid_dataset, matrix_zone
from .correlate import CorrelationMatrix, build_matrix
from .series import (
    AppCategoryMap,
    aggregate_app_usage,
    daily_mean_by_user,
    fuse_daily_contacts,
    purpose_percentages,
    split_periods,
    work_split,
)
from .timeline import EventTable, positiveness_index

log = logging.getLogger(__name__)

DEFAULT_LAGS = (0, 1, 2, 3, 4)

CONTEXT_FEATURES = (
    "active_cases",
    "new_confirmed",
    "total_confirmed",
    "new_deaths",
    "risk_zone",
    "positiveness",
)


@dataclass
class RunData:
    users: set[str] = field(default_factory=set)
    valence: list[tuple[str, datetime, float]] = field(default_factory=list)
    arousal: list[tuple[str, datetime, float]] = field(default_factory=list)
    sleep_hours: list[tuple[str, datetime, float]] = field(default_factory=list)
    sleep_quality: list[tuple[str, datetime, float]] = field(default_factory=list)
    proximity: list[tuple[str, datetime, int]] = field(default_factory=list)
    transport: list[tuple[str, datetime, str, str]] = field(default_factory=list)
    purposes: list[dict[str, str]] = field(default_factory=list)
    app_usage: list[tuple[str, Date, str, float]] = field(default_factory=list)
    sessions: list[tuple[str, datetime, datetime]] = field(default_factory=list)
    n_events: int = 0


def load_run(events_path: str | Path) -> RunData:
    """Bucket the event log by measurement kind, deduplicating transport
    answers per trip (latest answer wins)."""
    run = RunData()
    latest_transport: dict[tuple[str, str], tuple[datetime, str, str]] = {}
    for ev in read_event_log(events_path):
        run.n_events += 1
        run.users.add(ev.user)
        value = ev.payload.get("value") if isinstance(ev.payload, dict) else ev.payload
        kind = ev.kind
        if kind == "valence":
            run.valence.append((ev.user, ev.t, float(value)))
        elif kind == "arousal":
            run.arousal.append((ev.user, ev.t, float(value)))
        elif kind == "sleep_hours":
            run.sleep_hours.append((ev.user, ev.t, float(value)))
        elif kind == "sleep_quality":
            if value in SLEEP_QUALITY_ORDINAL:
                run.sleep_quality.append((ev.user, ev.t, float(SLEEP_QUALITY_ORDINAL[value])))
        elif kind == "reported_contacts":
            run.proximity.append((ev.user, ev.t, int(value)))
        elif kind == "transport_answer" and isinstance(value, dict):
            trip = str(value.get("trip_id", ""))
            key = (ev.user, trip)
            prev = latest_transport.get(key)
            if trip and (prev is None or ev.t >= prev[0]):
                latest_transport[key] = (ev.t, str(value["transport"]), str(value["people_bucket"]))
        elif kind == "purpose_answer" and isinstance(value, dict):
            run.purposes.append(dict(value.get("purposes", {})))
        elif kind == "app_usage" and isinstance(value, dict):
            run.app_usage.append(
                (ev.user, ev.t.date(), str(value["package"]), float(value["minutes"]))
            )
        elif kind == "app_session" and isinstance(value, dict):
            run.sessions.append(
                (str(value["package"]), parse_iso(value["start"]), parse_iso(value["end"]))
            )
    for (user, _trip), (ts, transport_type, bucket) in sorted(latest_transport.items()):
        run.transport.append((user, ts, transport_type, bucket))
    return run


def build_behavior_features(run: RunData) -> dict[str, dict[Date, float]]:
    features: dict[str, dict[Date, float]] = {
        "valence": daily_mean_by_user(run.valence),
        "arousal": daily_mean_by_user(run.arousal),
        "sleep_hours": daily_mean_by_user(run.sleep_hours),
        "sleep_quality": daily_mean_by_user(run.sleep_quality),
    }
    contact_by_user_day = fuse_daily_contacts(run.proximity, run.transport)
    per_day: dict[Date, list[int]] = {}
    for (_user, day), count in contact_by_user_day.items():
        per_day.setdefault(day, []).append(count)
    features["contacts"] = {d: sum(v) / len(v) for d, v in sorted(per_day.items())}
    behavior_days = sorted({d for series in features.values() for d in series})
    features["weekday"] = {d: float(d.weekday()) for d in behavior_days}
    return features


def build_context_features(
    covid: dict[Date, EpiSnapshot],
    events: EventTable,
) -> dict[str, dict[Date, float]]:
    features: dict[str, dict[Date, float]] = {name: {} for name in CONTEXT_FEATURES}
    for day, snap in sorted(covid.items()):
        for name in ("active_cases", "new_confirmed", "total_confirmed", "new_deaths"):
            value = getattr(snap, name)
            if value is not None:
                features[name][day] = float(value)
        if snap.incidence is not None and snap.rt is not None:
            try:
                features["risk_zone"][day] = float(matrix_zone(snap.incidence, snap.rt))
            except InvalidInput:
                pass
        features["positiveness"][day] = float(positiveness_index(events, day))
    return features


def run_report(
    events_path: str | Path,
    out_dir: str | Path,
    covid_path: str | Path | None = None,
    timeline_path: str | Path | None = None,
    categories_path: str | Path | None = None,
    lags: Iterable[int] = DEFAULT_LAGS,
) -> dict[str, Any]:
    """Produce the full offline report; returns the summary document."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run = load_run(events_path)
    if not run.users:
        raise Malformed(f"no events in {events_path}")
    events = EventTable.load(timeline_path) if timeline_path else EventTable.default()
    if covid_path is None:
        from importlib import resources

        ref = resources.files("hitloop.data") / "covid_daily.csv"
        with resources.as_file(ref) as p:
            covid = load_covid_dataset(str(p))
    else:
        covid = load_covid_dataset(str(covid_path))
    categories = AppCategoryMap.load(categories_path) if categories_path else AppCategoryMap.default()

    behavior = build_behavior_features(run)
    context = build_context_features(covid, events)
    features = {**behavior, **context}

    _write_daily_features(out / "daily_features.csv", features)
    usage_users = {u for u, _, _, _ in run.app_usage}
    usage_summary: dict[str, Any] = {}
    if usage_users:
        overall = aggregate_app_usage(run.app_usage, categories, usage_users)
        before_rows = [r for r in run.app_usage if r[1] < _period_cut()]
        after_rows = [r for r in run.app_usage if r[1] >= _period_cut()]
        before = aggregate_app_usage(before_rows, categories, usage_users) if before_rows else {}
        after = aggregate_app_usage(after_rows, categories, usage_users) if after_rows else {}
        _write_usage(out / "usage_by_category.csv", overall, before, after)
        usage_summary = {"categories": len(overall)}
    if run.sessions:
        per_package = work_split(run.sessions)
        _write_work_split(out / "work_split.csv", per_package, categories)
    if run.purposes:
        shares = purpose_percentages(run.purposes)
        _write_purposes(out / "purpose_shares.csv", shares)

    matrices: list[CorrelationMatrix] = []
    for lag in lags:
        matrix = build_matrix(features, lag, context_side=set(CONTEXT_FEATURES), unlagged={"weekday"})
        matrix.write_csv(out / f"correlations_lag{lag}.csv")
        matrices.append(matrix)
    _write_long(out / "correlations_long.csv", matrices)

    summary = {
        "users": len(run.users),
        "events": run.n_events,
        "lags": list(lags),
        "usage": usage_summary,
        "best_lag": _best_lags(matrices),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary


def _period_cut() -> Date:
    from .series import PERIOD_CUT

    return PERIOD_CUT


def _best_lags(matrices: list[CorrelationMatrix]) -> dict[str, dict[str, Any]]:
    """Strongest positive-lag pairing for a few headline behavior/context
    pairs, reported as {pair: {lag, r}}."""
    headline = [
        ("valence", "positiveness"),
        ("sleep_quality", "positiveness"),
        ("contacts", "new_confirmed"),
    ]
    out: dict[str, dict[str, Any]] = {}
    for a, b in headline:
        best: tuple[int, float] | None = None
        for matrix in matrices:
            if a not in matrix.names or b not in matrix.names:
                continue
            r, _n = matrix.cell(a, b)
            if r is None:
                continue
            if best is None or abs(r) > abs(best[1]):
                best = (matrix.lag, r)
        if best is not None:
            out[f"{a}~{b}"] = {"lag": best[0], "r": round(best[1], 4)}
    return out


def _write_daily_features(path: Path, features: dict[str, dict[Date, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "feature", "value"])
        for name, series in features.items():
            for day, value in sorted(series.items()):
                writer.writerow([day.isoformat(), name, f"{value:.6f}"])


def _write_usage(path: Path, overall: dict[str, float], before: dict[str, float], after: dict[str, float]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "mean_minutes_all", "mean_minutes_before_cut", "mean_minutes_after_cut"])
        for cat in sorted(set(overall) | set(before) | set(after)):
            writer.writerow([
                cat,
                f"{overall.get(cat, 0.0):.3f}",
                f"{before.get(cat, 0.0):.3f}",
                f"{after.get(cat, 0.0):.3f}",
            ])


def _write_work_split(path: Path, per_package: dict[str, tuple[float, float]], categories: AppCategoryMap) -> None:
    per_category: dict[str, list[float]] = {}
    for package, (work, nonwork) in per_package.items():
        agg = per_category.setdefault(categories.category_of(package), [0.0, 0.0])
        agg[0] += work
        agg[1] += nonwork
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "work_minutes", "nonwork_minutes", "work_pct"])
        for cat, (work, nonwork) in sorted(per_category.items()):
            total = work + nonwork
            pct = 100.0 * work / total if total > 0 else 0.0
            writer.writerow([cat, f"{work:.2f}", f"{nonwork:.2f}", f"{pct:.2f}"])


def _write_purposes(path: Path, shares: dict[str, dict[str, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["package", "purpose", "pct"])
        for package, by_purpose in shares.items():
            for purpose, pct in by_purpose.items():
                writer.writerow([package, purpose, f"{pct:.2f}"])


def _write_long(path: Path, matrices: list[CorrelationMatrix]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_a", "feature_b", "lag", "r", "n"])
        for matrix in matrices:
            for i, a in enumerate(matrix.names):
                for j in range(i + 1, len(matrix.names)):
                    r = matrix.r[i][j]
                    writer.writerow([
                        a,
                        matrix.names[j],
                        matrix.lag,
                        "" if r is None else f"{r:.6f}",
                        matrix.n[i][j],
                    ])
