"""Tests for the offline report pipeline: event-log loading, feature
assembly and the artifact bundle written by run_report."""

from __future__ import annotations

import csv
import json
from datetime import date, datetime, timezone

import pytest

from conftest import utc
from hitloop import errors
from hitloop.analysis.pipeline import (
    CONTEXT_FEATURES,
    RunData,
    build_behavior_features,
    build_context_features,
    load_run,
    run_report,
)
from hitloop.engagement import TRANSPORT_BUCKETS
from hitloop.analysis.timeline import EventTable, TimelineEvent
from hitloop.events import SensorEvent, write_event_log
from hitloop.risk import EpiSnapshot


def _event(user, kind, value, t):
    return SensorEvent(user=user, kind=kind, payload={"value": value}, t=t)


# -- load_run ------------------------------------------------------------


def test_load_run_buckets_by_kind(tmp_path):
    t0 = utc(2021, 3, 1, 10, 0)
    events = [
        _event("u1", "valence", 4, t0),
        _event("u1", "arousal", 2, t0),
        _event("u1", "sleep_hours", 7.5, t0),
        _event("u1", "sleep_quality", "good", t0),
        _event("u1", "reported_contacts", 3, t0),
        _event("u1", "purpose_answer", {"purposes": {"org.app": "work"}}, t0),
        _event("u1", "app_usage", {"package": "org.app", "minutes": 12.5}, t0),
        _event("u1", "app_session",
               {"package": "org.app", "start": "2021-03-01T09:00:00+00:00",
                "end": "2021-03-01T09:30:00+00:00"}, t0),
        _event("u1", "noise_db", 40.0, t0),
    ]
    path = tmp_path / "events.jsonl"
    write_event_log(path, events)

    run = load_run(path)
    assert run.users == {"u1"}
    assert run.n_events == 9
    assert run.valence == [("u1", t0, 4.0)]
    assert run.arousal == [("u1", t0, 2.0)]
    assert run.sleep_hours == [("u1", t0, 7.5)]
    assert run.sleep_quality == [("u1", t0, 4.0)]
    assert run.proximity == [("u1", t0, 3)]
    assert run.purposes == [{"org.app": "work"}]
    assert run.app_usage == [("u1", date(2021, 3, 1), "org.app", 12.5)]
    assert run.sessions == [("org.app",
                             utc(2021, 3, 1, 9, 0), utc(2021, 3, 1, 9, 30))]


def test_load_run_keeps_latest_transport_answer_per_trip(tmp_path):
    t0 = utc(2021, 3, 1, 10, 0)
    t1 = utc(2021, 3, 1, 10, 20)
    events = [
        _event("u1", "transport_answer",
               {"transport": "bus", "people_bucket": "5-10", "trip_id": "u1-trip0001"}, t0),
        _event("u1", "transport_answer",
               {"transport": "bus", "people_bucket": "26-50", "trip_id": "u1-trip0001"}, t1),
        _event("u1", "transport_answer",
               {"transport": "car", "people_bucket": "1", "trip_id": "u1-trip0002"},
               utc(2021, 3, 2, 9, 0)),
    ]
    path = tmp_path / "events.jsonl"
    write_event_log(path, events)

    run = load_run(path)
    assert run.transport == [
        ("u1", t1, "bus", "26-50"),
        ("u1", utc(2021, 3, 2, 9, 0), "car", "1"),
    ]


def test_load_run_drops_transport_answer_without_trip(tmp_path):
    events = [_event("u1", "transport_answer",
                     {"transport": "bus", "people_bucket": "5-10", "trip_id": ""},
                     utc(2021, 3, 1, 10, 0))]
    path = tmp_path / "events.jsonl"
    write_event_log(path, events)
    assert load_run(path).transport == []


def test_load_run_skips_unknown_sleep_labels(tmp_path):
    events = [
        _event("u1", "sleep_quality", "good", utc(2021, 3, 1, 10, 0)),
        _event("u1", "sleep_quality", "transcendent", utc(2021, 3, 2, 10, 0)),
    ]
    path = tmp_path / "events.jsonl"
    write_event_log(path, events)
    run = load_run(path)
    assert len(run.sleep_quality) == 1


def test_load_run_over_simulated_log(default_run):
    run = load_run(default_run.events_path)
    assert len(run.users) == 14
    assert run.n_events == default_run.counts["events"]
    assert run.valence and run.arousal and run.sleep_hours and run.sleep_quality
    assert run.proximity and run.transport and run.purposes and run.app_usage
    trips = [(u, ts) for u, ts, _, _ in run.transport]
    assert len(trips) == len(set(trips))
    for _user, _ts, transport_type, bucket in run.transport:
        assert bucket in TRANSPORT_BUCKETS[transport_type]


# -- feature assembly ----------------------------------------------------


def test_behavior_features_daily_means(tmp_path):
    run = RunData()
    d1 = utc(2021, 3, 1, 9, 0)
    run.valence = [("u1", d1, 2.0), ("u1", d1.replace(hour=15), 4.0),
                   ("u2", d1, 5.0)]
    run.proximity = [("u1", d1, 3), ("u2", d1, 5)]
    features = build_behavior_features(run)
    assert features["valence"][date(2021, 3, 1)] == 4.0
    assert features["contacts"][date(2021, 3, 1)] == 4.0
    assert features["weekday"][date(2021, 3, 1)] == 0.0


def test_behavior_features_weekday_spans_all_days(tmp_path):
    run = RunData()
    run.valence = [("u1", utc(2021, 3, 1, 9), 3.0)]
    run.sleep_hours = [("u1", utc(2021, 3, 4, 9), 7.0)]
    features = build_behavior_features(run)
    assert set(features["weekday"]) == {date(2021, 3, 1), date(2021, 3, 4)}
    assert features["weekday"][date(2021, 3, 4)] == 3.0


def test_context_features_from_covid_and_events():
    covid = {
        date(2021, 3, 1): EpiSnapshot(date=date(2021, 3, 1), incidence=200.0, rt=1.1,
                                      active_cases=50, new_confirmed=10,
                                      total_confirmed=1000, new_deaths=1),
        date(2021, 3, 2): EpiSnapshot(date=date(2021, 3, 2), incidence=None, rt=0.9,
                                      active_cases=None, new_confirmed=8,
                                      total_confirmed=1008, new_deaths=0),
    }
    events = EventTable([TimelineEvent(date(2021, 3, 2), +1, "reopening")])
    features = build_context_features(covid, events)
    assert set(features) == set(CONTEXT_FEATURES)
    assert features["risk_zone"] == {date(2021, 3, 1): 2.0}
    assert features["active_cases"] == {date(2021, 3, 1): 50.0}
    assert features["new_confirmed"] == {date(2021, 3, 1): 10.0, date(2021, 3, 2): 8.0}
    assert features["positiveness"] == {date(2021, 3, 1): 0.0, date(2021, 3, 2): 0.0}


def test_context_positiveness_counts_strictly_prior_events():
    covid = {date(2021, 3, 3): EpiSnapshot(date=date(2021, 3, 3))}
    events = EventTable([TimelineEvent(date(2021, 3, 2), +1, "reopening")])
    features = build_context_features(covid, events)
    assert features["positiveness"] == {date(2021, 3, 3): 1.0}


# -- run_report ----------------------------------------------------------


def test_run_report_writes_artifact_bundle(default_run, tmp_path):
    out = tmp_path / "report"
    summary = run_report(default_run.events_path, out)

    expected = {
        "daily_features.csv",
        "usage_by_category.csv",
        "work_split.csv",
        "purpose_shares.csv",
        "correlations_long.csv",
        "summary.json",
    } | {f"correlations_lag{lag}.csv" for lag in range(5)}
    assert {p.name for p in out.iterdir()} == expected

    assert summary["users"] == 14
    assert summary["events"] == default_run.counts["events"]
    assert summary["lags"] == [0, 1, 2, 3, 4]
    assert summary["usage"]["categories"] >= 3
    assert json.loads((out / "summary.json").read_text()) == summary


def test_run_report_headline_lag_matches_injected_delay(default_run, tmp_path):
    out = tmp_path / "report"
    summary = run_report(default_run.events_path, out)
    best = summary["best_lag"]["sleep_quality~positiveness"]
    assert best["lag"] == 3
    assert best["r"] > 0.4


def test_run_report_daily_features_contents(default_run, tmp_path):
    out = tmp_path / "report"
    run_report(default_run.events_path, out)
    with open(out / "daily_features.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["date", "feature", "value"]
    names = {row[1] for row in rows[1:]}
    assert {"valence", "arousal", "sleep_hours", "sleep_quality",
            "contacts", "weekday"} <= names
    assert set(CONTEXT_FEATURES) <= names
    for row in rows[1:]:
        date.fromisoformat(row[0])
        float(row[2])


def test_run_report_correlation_csv_shape(default_run, tmp_path):
    out = tmp_path / "report"
    run_report(default_run.events_path, out, lags=(0, 3))
    assert (out / "correlations_lag3.csv").exists()
    assert not (out / "correlations_lag1.csv").exists()
    with open(out / "correlations_long.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["feature_a", "feature_b", "lag", "r", "n"]
    lags_seen = {row[2] for row in rows[1:]}
    assert lags_seen == {"0", "3"}


def test_run_report_rejects_empty_log(tmp_path):
    empty = tmp_path / "events.jsonl"
    empty.write_text("")
    with pytest.raises(errors.Malformed):
        run_report(empty, tmp_path / "out")
