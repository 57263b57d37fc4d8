"""Tests for the HTTP surface: entity CRUD, device ingestion, series
queries, the questionnaire flow, trigger intake, risk and feedback views,
and the domain-error to status-code mapping."""

from __future__ import annotations

from datetime import timedelta

import pytest
from fastapi.testclient import TestClient

from conftest import utc
from hitloop.engagement import QuestionnaireKind
from hitloop.feedback import ACTIVE_ONLY_FIELDS, FeedbackGroup, assign_group
from hitloop.http_api import create_app
from hitloop.platform import build_platform

START = utc(2021, 3, 10, 15, 0)


@pytest.fixture()
def api():
    """A live app over a small platform with a controllable clock."""
    state = {"now": START}
    platform = build_platform(clock=lambda: state["now"])
    platform.enroll("alice", municipality="Lisboa", api_key="key-alice")
    platform.enroll("bob", municipality="Sintra", api_key="key-bob")
    client = TestClient(create_app(platform))
    return client, platform, state


def _iso(ts):
    return ts.isoformat(timespec="seconds")


# -- broker endpoints ----------------------------------------------------


def test_create_get_patch_entity(api):
    client, _, _ = api
    body = {
        "id": "room-1",
        "type": "Room",
        "attributes": {
            "temperature": {"value": 21.5, "observed_at": _iso(START)},
        },
    }
    created = client.post("/v2/entities", json=body)
    assert created.status_code == 201
    assert created.json() == {"id": "room-1", "version": 1}

    got = client.get("/v2/entities/room-1")
    assert got.status_code == 200
    doc = got.json()
    assert doc["id"] == "room-1"
    assert doc["type"] == "Room"
    assert doc["attributes"]["temperature"]["value"] == 21.5

    patched = client.patch("/v2/entities/room-1/attrs", json={
        "humidity": {"value": 40, "observed_at": _iso(START + timedelta(minutes=1))},
    })
    assert patched.status_code == 200
    assert patched.json()["version"] == 2
    doc = client.get("/v2/entities/room-1").json()
    assert set(doc["attributes"]) == {"temperature", "humidity"}


def test_entity_attribute_body_must_carry_timestamp(api):
    client, _, _ = api
    r = client.post("/v2/entities", json={
        "id": "room-1", "type": "Room",
        "attributes": {"temperature": {"value": 21.5}},
    })
    assert r.status_code == 400
    assert r.json()["error"] == "Malformed"


def test_get_missing_entity_is_404(api):
    client, _, _ = api
    r = client.get("/v2/entities/nope")
    assert r.status_code == 404
    assert r.json()["error"] == "NotFound"


def test_stale_update_maps_to_conflict(api):
    client, _, _ = api
    client.post("/v2/entities", json={
        "id": "room-1", "type": "Room",
        "attributes": {"temperature": {"value": 21.5, "observed_at": _iso(START)}},
    })
    r = client.patch("/v2/entities/room-1/attrs", json={
        "temperature": {"value": 19.0,
                        "observed_at": _iso(START - timedelta(minutes=10))},
    })
    assert r.status_code == 409
    assert r.json()["error"] == "StaleUpdate"


def test_entity_query_with_predicates(api):
    client, _, _ = api
    for entity_id, occupancy in (("room-1", 3), ("room-2", 9), ("hall-1", 9)):
        client.post("/v2/entities", json={
            "id": entity_id,
            "type": "Room" if entity_id.startswith("room") else "Hall",
            "attributes": {"occupancy": {"value": occupancy, "observed_at": _iso(START)}},
        })
    r = client.get("/v2/entities", params={"type": "Room", "q": "occupancy>5"})
    assert r.status_code == 200
    assert [doc["id"] for doc in r.json()] == ["room-2"]

    r = client.get("/v2/entities", params={"q": "occupancy==9"})
    assert {doc["id"] for doc in r.json()} == {"room-2", "hall-1"}


def test_entity_query_bad_clause_is_400(api):
    client, _, _ = api
    r = client.get("/v2/entities", params={"q": "occupancy~5"})
    assert r.status_code == 400


def test_create_subscription_returns_id(api):
    client, platform, _ = api
    r = client.post("/v2/subscriptions", json={
        "entity_type": "Sensor",
        "watched_attributes": ["temperature"],
        "sink_url": "http://example.invalid/hook",
        "throttling_s": 60,
    })
    assert r.status_code == 201
    sub_id = r.json()["subscriptionId"]
    assert sub_id


# -- ingestion -----------------------------------------------------------


def test_ingest_requires_valid_key(api):
    client, _, _ = api
    r = client.post("/iot/measures", params={"k": "wrong", "i": "dev-alice"},
                    json=[{"a": "steps", "v": 100, "t": _iso(START)}])
    assert r.status_code == 401
    assert r.json()["error"] == "Unauthorized"


def test_ingest_accepts_and_reports_skips(api):
    client, _, _ = api
    r = client.post("/iot/measures", params={"k": "key-alice", "i": "dev-alice"},
                    json=[
                        {"a": "steps", "v": 1200, "t": _iso(START - timedelta(hours=1))},
                        {"a": "bogus", "v": 1, "t": _iso(START)},
                    ])
    assert r.status_code == 200
    body = r.json()
    assert body["accepted"] == 1
    assert body["skipped"] == [{"alias": "bogus", "reason": "unknown_alias"}]


def test_ingest_item_missing_field_is_400(api):
    client, _, _ = api
    r = client.post("/iot/measures", params={"k": "key-alice", "i": "dev-alice"},
                    json=[{"a": "steps", "v": 100}])
    assert r.status_code == 400


# -- history -------------------------------------------------------------


def _seed_steps(platform, n=5):
    for k in range(n):
        platform.emit("alice", "steps", 100 * (k + 1),
                      START - timedelta(hours=6) + timedelta(minutes=30 * k))


def test_history_raw_window_and_pagination(api):
    client, platform, _ = api
    _seed_steps(platform)
    params = {
        "dateFrom": _iso(START - timedelta(hours=6)),
        "dateTo": _iso(START),
        "hLimit": 2,
    }
    r = client.get("/sth/alice/attrs/steps", params=params)
    assert r.status_code == 200
    body = r.json()
    assert [p["v"] for p in body["points"]] == [100, 200]
    assert body["next_token"] == "2"

    r2 = client.get("/sth/alice/attrs/steps", params={**params, "token": body["next_token"]})
    assert [p["v"] for p in r2.json()["points"]] == [300, 400]


def test_history_offset_mirrors_token(api):
    client, platform, _ = api
    _seed_steps(platform)
    params = {
        "dateFrom": _iso(START - timedelta(hours=6)),
        "dateTo": _iso(START),
        "hLimit": 2,
        "hOffset": 2,
    }
    r = client.get("/sth/alice/attrs/steps", params=params)
    assert [p["v"] for p in r.json()["points"]] == [300, 400]


def test_history_negative_offset_is_400(api):
    client, platform, _ = api
    _seed_steps(platform)
    r = client.get("/sth/alice/attrs/steps", params={
        "dateFrom": _iso(START - timedelta(hours=6)),
        "dateTo": _iso(START),
        "hOffset": -1,
    })
    assert r.status_code == 400


def test_history_requires_window_params(api):
    client, _, _ = api
    r = client.get("/sth/alice/attrs/steps")
    assert r.status_code == 422


def test_history_unknown_series_is_404(api):
    client, _, _ = api
    r = client.get("/sth/alice/attrs/steps", params={
        "dateFrom": _iso(START - timedelta(hours=6)),
        "dateTo": _iso(START),
    })
    assert r.status_code == 404


def test_history_aggregate_buckets(api):
    client, platform, _ = api
    platform.emit("alice", "steps", 100, utc(2021, 3, 9, 10, 0))
    platform.emit("alice", "steps", 300, utc(2021, 3, 9, 18, 0))
    platform.emit("alice", "steps", 500, utc(2021, 3, 10, 9, 0))
    r = client.get("/sth/alice/attrs/steps", params={
        "dateFrom": _iso(utc(2021, 3, 9)),
        "dateTo": _iso(utc(2021, 3, 11)),
        "aggrMethod": "mean",
        "aggrPeriod": "day",
    })
    assert r.status_code == 200
    assert r.json()["buckets"] == [
        {"bucket_start": "2021-03-09T00:00:00+00:00", "value": 200.0},
        {"bucket_start": "2021-03-10T00:00:00+00:00", "value": 500.0},
    ]


def test_history_aggregate_needs_both_params(api):
    client, platform, _ = api
    _seed_steps(platform)
    r = client.get("/sth/alice/attrs/steps", params={
        "dateFrom": _iso(START - timedelta(hours=6)),
        "dateTo": _iso(START),
        "aggrMethod": "mean",
    })
    assert r.status_code == 400


# -- questionnaire flow --------------------------------------------------


def test_prompt_flow_roundtrip(api):
    client, platform, state = api
    prompt = platform.engine.raise_prompt("alice", QuestionnaireKind.SAM_EMOTION, state["now"])

    listed = client.get("/prompts", params={"user": "alice"}).json()["prompts"]
    assert [p["prompt_id"] for p in listed] == [prompt.prompt_id]
    assert listed[0]["kind"] == "sam_emotion"

    state["now"] += timedelta(minutes=5)
    r = client.post(f"/prompts/{prompt.prompt_id}/answer", json={
        "kind": "sam_emotion", "valence": 4, "arousal": 2,
    })
    assert r.status_code == 200
    body = r.json()
    assert body["payload"] == {"valence": 4, "arousal": 2}
    assert body["user"] == "alice"

    assert client.get("/prompts", params={"user": "alice"}).json()["prompts"] == []


def test_answer_validation_maps_to_400(api):
    client, platform, state = api
    prompt = platform.engine.raise_prompt("alice", QuestionnaireKind.SAM_EMOTION, state["now"])
    r = client.post(f"/prompts/{prompt.prompt_id}/answer", json={
        "kind": "sam_emotion", "valence": 11, "arousal": 2,
    })
    assert r.status_code == 400
    assert r.json()["error"] == "ValidationFailed"


def test_answer_missing_field_is_400(api):
    client, platform, state = api
    prompt = platform.engine.raise_prompt("alice", QuestionnaireKind.SAM_EMOTION, state["now"])
    r = client.post(f"/prompts/{prompt.prompt_id}/answer", json={
        "kind": "sam_emotion", "valence": 4,
    })
    assert r.status_code == 400


def test_expired_answer_maps_to_410(api):
    client, platform, state = api
    prompt = platform.engine.raise_prompt("alice", QuestionnaireKind.SAM_EMOTION, state["now"])
    state["now"] += timedelta(hours=25)
    r = client.post(f"/prompts/{prompt.prompt_id}/answer", json={
        "kind": "sam_emotion", "valence": 4, "arousal": 2,
    })
    assert r.status_code == 410
    assert r.json()["error"] == "Expired"


def test_unknown_prompt_is_404(api):
    client, _, _ = api
    r = client.post("/prompts/p9999999/answer", json={
        "kind": "sam_emotion", "valence": 4, "arousal": 2,
    })
    assert r.status_code == 404


# -- trigger intake ------------------------------------------------------


def test_person_count_event_prompts_and_records(api):
    client, platform, state = api
    r = client.post("/events", json={
        "user": "alice", "kind": "person_count",
        "payload": {"count": 5}, "t": _iso(state["now"]),
    })
    assert r.status_code == 202
    prompt = r.json()["prompt"]
    assert prompt is not None
    assert prompt["kind"] == "proximity"
    assert prompt["context"]["person_count"] == 5

    raw = client.get("/sth/alice/attrs/person_count", params={
        "dateFrom": _iso(state["now"] - timedelta(minutes=1)),
        "dateTo": _iso(state["now"] + timedelta(minutes=1)),
    }).json()
    assert [p["v"] for p in raw["points"]] == [5]


def test_small_person_count_prompts_nothing(api):
    client, _, state = api
    r = client.post("/events", json={
        "user": "alice", "kind": "person_count",
        "payload": {"count": 2}, "t": _iso(state["now"]),
    })
    assert r.status_code == 202
    assert r.json()["prompt"] is None


def test_vehicle_episode_event_creates_trip(api):
    client, _, state = api
    start = state["now"] - timedelta(minutes=10)
    end = state["now"] - timedelta(minutes=2)
    r = client.post("/events", json={
        "user": "alice", "kind": "vehicle_episode",
        "payload": {"start": _iso(start), "end": _iso(end)},
        "t": _iso(state["now"]),
    })
    assert r.status_code == 202
    prompt = r.json()["prompt"]
    assert prompt["kind"] == "transport"
    trip_id = prompt["context"]["trip_id"]
    assert trip_id == "alice-trip0001"

    raw = client.get("/sth/alice/attrs/trip_episode", params={
        "dateFrom": _iso(state["now"] - timedelta(minutes=1)),
        "dateTo": _iso(state["now"] + timedelta(minutes=1)),
    }).json()
    assert raw["points"][0]["v"]["trip_id"] == trip_id
    assert raw["points"][0]["v"]["seconds"] == 480.0


def test_event_accepts_z_suffixed_timestamps(api):
    """JavaScript Date.toISOString() output must parse, trailing Z and all."""
    client, _, state = api
    start = state["now"] - timedelta(minutes=10)
    end = state["now"] - timedelta(minutes=2)
    as_js = lambda ts: ts.strftime("%Y-%m-%dT%H:%M:%S.000Z")
    r = client.post("/events", json={
        "user": "alice", "kind": "vehicle_episode",
        "payload": {"start": as_js(start), "end": as_js(end)},
        "t": as_js(state["now"]),
    })
    assert r.status_code == 202
    assert r.json()["prompt"]["kind"] == "transport"


def test_event_with_garbage_timestamp_is_400(api):
    client, _, state = api
    r = client.post("/events", json={
        "user": "alice", "kind": "vehicle_episode",
        "payload": {"start": "not-a-time", "end": _iso(state["now"])},
        "t": _iso(state["now"]),
    })
    assert r.status_code == 400
    assert r.json()["error"] == "Malformed"


def test_event_for_unenrolled_user_is_404(api):
    client, _, state = api
    r = client.post("/events", json={
        "user": "ghost", "kind": "person_count", "payload": {"count": 5},
        "t": _iso(state["now"]),
    })
    assert r.status_code == 404


def test_event_unknown_kind_is_400(api):
    client, _, state = api
    r = client.post("/events", json={
        "user": "alice", "kind": "sneeze", "payload": {},
        "t": _iso(state["now"]),
    })
    assert r.status_code == 400


# -- risk and feedback views ---------------------------------------------


def test_risk_endpoint_as_of_date(api):
    client, _, _ = api
    r = client.get("/risk", params={"municipality": "Lisboa", "date": "2021-03-10"})
    assert r.status_code == 200
    assert r.json() == {"municipality": "Lisboa", "date": "2021-03-10", "level": "very_high"}


def test_risk_endpoint_defaults_to_today(api):
    client, _, _ = api
    r = client.get("/risk", params={"municipality": "Lisboa"})
    assert r.status_code == 200
    assert r.json()["date"] == "2021-03-10"


def test_risk_unknown_municipality_is_404(api):
    client, _, _ = api
    r = client.get("/risk", params={"municipality": "Atlantis", "date": "2021-03-10"})
    assert r.status_code == 404


def test_feedback_window_metrics_on_demand(api):
    client, platform, state = api
    active = next(u for u in ("alice", "bob")
                  if assign_group(u) is FeedbackGroup.ACTIVE)
    for hours_ago, valence in ((20, 2), (10, 4)):
        platform.emit(active, "valence", valence, state["now"] - timedelta(hours=hours_ago))
    r = client.get("/feedback", params={"user": active, "window": "last_24h"})
    assert r.status_code == 200
    doc = r.json()
    assert doc["user"] == active
    assert doc["window"] == "last_24h"
    assert doc["valence_mean"] == 3.0


def test_feedback_control_user_hides_active_fields(api):
    client, _, _ = api
    control = next(u for u in ("alice", "bob")
                   if assign_group(u) is FeedbackGroup.CONTROL)
    r = client.get("/feedback", params={"user": control, "window": "last_24h"})
    assert r.status_code == 200
    assert not set(ACTIVE_ONLY_FIELDS) & set(r.json())


def test_feedback_bad_window_is_400(api):
    client, _, _ = api
    r = client.get("/feedback", params={"user": "alice", "window": "last_hour"})
    assert r.status_code == 400


def test_feedback_unenrolled_user_is_404(api):
    client, _, _ = api
    r = client.get("/feedback", params={"user": "ghost"})
    assert r.status_code == 404


def test_weekly_composes_on_demand(api):
    client, _, _ = api
    r = client.get("/weekly", params={"user": "alice"})
    assert r.status_code == 200
    doc = r.json()
    assert doc["user"] == "alice"
    assert doc["week_end"].startswith("2021-03-06")
    assert doc["contacts_message"]
    assert doc["mobility_message"]
    assert isinstance(doc["notes"], list)


def test_users_listing_includes_groups(api):
    client, _, _ = api
    r = client.get("/users")
    listed = {u["user"]: u for u in r.json()["users"]}
    assert set(listed) == {"alice", "bob"}
    assert listed["alice"]["municipality"] == "Lisboa"
    for doc in listed.values():
        assert doc["group"] in ("active", "control")


def test_healthz_reports_clock(api):
    client, _, state = api
    r = client.get("/healthz")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "now": "2021-03-10T15:00:00+00:00"}
