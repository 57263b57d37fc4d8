"""HTTP surface over a running platform.

Exposes the broker entity API, device ingestion, series queries,
questionnaire flow (pending prompts and answers), opportunistic trigger
intake, municipal risk lookup and the feedback views. All request and
response bodies are plain JSON; domain errors map onto 4xx statuses.
"""

from __future__ import annotations

import logging
from datetime import date as Date
from datetime import datetime, time as Time
from typing import Any

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from . import errors
from .broker import AttributeValue, ContextEntity, Subscription, WILDCARD
from .engagement import (
    ProximityAnswer,
    PurposeAnswer,
    QuestionnaireKind,
    SamAnswer,
    SleepAnswer,
    TransportAnswer,
)
from .events import iso, parse_iso
from .feedback import WINDOWS, assign_group, weekly_boundary_at_or_before
from .gateway import Measurement
from .history import SeriesKey
from .platform import Platform
from .sensing import ActivitySegment

log = logging.getLogger(__name__)

_STATUS = (
    (errors.Expired, 410),
    (errors.Unauthorized, 401),
    (errors.StaleUpdate, 409),
    (errors.DuplicateDevice, 409),
    (errors.NotFound, 404),  # covers UnknownSeries, UnknownPrompt
    (errors.Malformed, 400),
    (errors.ValidationFailed, 400),
    (errors.InvalidInput, 400),
    (errors.OutOfSpan, 400),
)


def _status_for(exc: errors.PlatformError) -> int:
    for klass, status in _STATUS:
        if isinstance(exc, klass):
            return status
    return 500


_COMPARATOR_ORDER = ("==", "!=", ">=", "<=", ">", "<")


def _request_ts(text: Any) -> datetime:
    """Parse a timestamp taken from a request; bad input is the caller's fault."""
    try:
        return parse_iso(text)
    except (TypeError, ValueError) as exc:
        raise errors.Malformed(f"cannot parse timestamp {text!r}") from exc


def _parse_predicates(q: str) -> list[tuple[str, str, Any]]:
    predicates = []
    for clause in q.split(";"):
        clause = clause.strip()
        if not clause:
            continue
        for op in _COMPARATOR_ORDER:
            if op in clause:
                attr, _, raw = clause.partition(op)
                predicates.append((attr.strip(), op, _coerce(raw.strip())))
                break
        else:
            raise errors.Malformed(f"cannot parse query clause {clause!r}")
    return predicates


def _coerce(raw: str) -> Any:
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def _entity_from_body(entity_id: str, body: dict[str, Any]) -> ContextEntity:
    attributes = {}
    for name, doc in (body.get("attributes") or {}).items():
        if not isinstance(doc, dict) or "value" not in doc or "observed_at" not in doc:
            raise errors.Malformed(f"attribute {name!r} needs value and observed_at")
        attributes[name] = AttributeValue(
            value=doc["value"],
            observed_at=_request_ts(doc["observed_at"]),
            metadata=dict(doc.get("metadata", {})),
        )
    return ContextEntity(id=entity_id, entity_type=body.get("type", ""), attributes=attributes)


def _parse_answer(kind: str, body: dict[str, Any]):
    try:
        qkind = QuestionnaireKind(kind)
    except ValueError:
        raise errors.ValidationFailed(f"unknown questionnaire kind {kind!r}") from None
    try:
        if qkind is QuestionnaireKind.SAM_EMOTION:
            return SamAnswer(valence=body["valence"], arousal=body["arousal"])
        if qkind is QuestionnaireKind.SLEEP_REPORT:
            return SleepAnswer(
                bed_time=Time.fromisoformat(body["bed_time"]),
                wake_time=Time.fromisoformat(body["wake_time"]),
                quality=body["quality"],
            )
        if qkind is QuestionnaireKind.APP_PURPOSE:
            return PurposeAnswer(purposes=dict(body["purposes"]))
        if qkind is QuestionnaireKind.PROXIMITY:
            return ProximityAnswer(people_within_2m=body["people_within_2m"])
        return TransportAnswer(
            transport=body["transport"],
            people_bucket=body["people_bucket"],
            trip_id=body.get("trip_id", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise errors.ValidationFailed(f"bad answer body: {exc}") from None


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(title="hitloop", docs_url=None, redoc_url=None)

    @app.exception_handler(errors.PlatformError)
    async def _platform_error(_request: Request, exc: errors.PlatformError):
        return JSONResponse(status_code=_status_for(exc),
                            content={"error": type(exc).__name__, "detail": str(exc)})

    # -- broker -----------------------------------------------------------

    @app.post("/v2/entities", status_code=201)
    async def create_entity(body: dict[str, Any]):
        entity = _entity_from_body(body.get("id", ""), body)
        version = platform.broker.upsert_entity(entity)
        return {"id": entity.id, "version": version}

    @app.patch("/v2/entities/{entity_id}/attrs")
    async def patch_entity(entity_id: str, body: dict[str, Any]):
        current = platform.broker.get_entity(entity_id)
        entity = _entity_from_body(entity_id, {"type": current.entity_type, "attributes": body})
        version = platform.broker.upsert_entity(entity)
        return {"id": entity_id, "version": version}

    @app.get("/v2/entities/{entity_id}")
    async def get_entity(entity_id: str):
        return platform.broker.get_entity(entity_id).to_doc()

    @app.get("/v2/entities")
    async def query_entities(type: str = WILDCARD, q: str = ""):
        predicates = _parse_predicates(q) if q else []
        return [e.to_doc() for e in platform.broker.query_entities(type, predicates)]

    @app.post("/v2/subscriptions", status_code=201)
    async def create_subscription(body: dict[str, Any]):
        throttling_s = float(body.get("throttling_s", 0))
        from datetime import timedelta

        sub = Subscription(
            entity_type_filter=body.get("entity_type", WILDCARD),
            watched_attributes=frozenset(body.get("watched_attributes", [])),
            sink=body.get("sink_url", ""),
            throttling=timedelta(seconds=throttling_s),
        )
        return {"subscriptionId": platform.broker.create_subscription(sub)}

    # -- ingestion --------------------------------------------------------

    @app.post("/iot/measures")
    async def ingest(body: list[dict[str, Any]], k: str = Query(...), i: str = Query(...)):
        batch = []
        for item in body:
            if not isinstance(item, dict) or not {"a", "v", "t"} <= set(item):
                raise errors.Malformed("each measurement needs fields a, v, t")
            batch.append(Measurement(alias=item["a"], value=item["v"], observed_at=_request_ts(item["t"])))
        result = platform.ingest_batch(k, i, batch)
        return {"accepted": result.accepted, "skipped": result.skipped}

    # -- history ----------------------------------------------------------

    @app.get("/sth/{entity_id}/attrs/{attribute}")
    async def history_query(
        entity_id: str,
        attribute: str,
        dateFrom: str,
        dateTo: str,
        hLimit: int = 100,
        hOffset: int = 0,
        token: str | None = None,
        aggrMethod: str | None = None,
        aggrPeriod: str | None = None,
    ):
        key = SeriesKey(entity_id, attribute)
        t_from, t_to = _request_ts(dateFrom), _request_ts(dateTo)
        if aggrMethod or aggrPeriod:
            if not (aggrMethod and aggrPeriod):
                raise errors.Malformed("aggrMethod and aggrPeriod go together")
            buckets = platform.history.query_aggregate(key, t_from, t_to, aggrMethod, aggrPeriod)
            return {"buckets": [
                {"bucket_start": iso(b), "value": v} for b, v in buckets
            ]}
        if token is None and hOffset:
            if hOffset < 0:
                raise errors.Malformed("hOffset must be non-negative")
            token = str(hOffset)
        points, next_token = platform.history.query_raw(key, t_from, t_to, limit=hLimit, token=token)
        return {
            "points": [{"t": iso(p.observed_at), "v": p.value} for p in points],
            "next_token": next_token,
        }

    # -- questionnaires ---------------------------------------------------

    @app.get("/prompts")
    async def pending_prompts(user: str):
        now = platform.clock()
        return {"prompts": [p.to_doc() for p in platform.engine.list_pending(user, now)]}

    @app.post("/prompts/{prompt_id}/answer")
    async def answer_prompt(prompt_id: str, body: dict[str, Any]):
        answer = _parse_answer(body.get("kind", ""), body)
        record = platform.engine.submit_answer(prompt_id, answer, platform.clock())
        return {
            "prompt_id": record.prompt_id,
            "user": record.user,
            "kind": record.kind.value,
            "payload": record.payload(),
            "answered_at": iso(record.answered_at),
        }

    @app.post("/events", status_code=202)
    async def intake_event(body: dict[str, Any]):
        user = body.get("user", "")
        kind = body.get("kind", "")
        payload = body.get("payload") or {}
        t = _request_ts(body["t"]) if body.get("t") else platform.clock()
        if user not in platform.users:
            raise errors.NotFound(f"user {user!r} not enrolled")
        if kind == "person_count":
            count = int(payload.get("count", 0))
            platform.emit(user, "person_count", count, t)
            prompt = platform.engine.on_proximity(user, count, t)
        elif kind == "vehicle_episode":
            segment = ActivitySegment("in_vehicle", _request_ts(payload["start"]), _request_ts(payload["end"]))
            prompt = platform.engine.on_vehicle_episode(user, segment, t)
            if prompt is not None:
                platform.emit(user, "trip_episode", {
                    "trip_id": prompt.context["trip_id"],
                    "start": payload["start"],
                    "end": payload["end"],
                    "seconds": segment.duration.total_seconds(),
                }, t)
        else:
            raise errors.Malformed(f"unknown event kind {kind!r}")
        return {"prompt": prompt.to_doc() if prompt is not None else None}

    # -- risk and feedback ------------------------------------------------

    @app.get("/risk")
    async def risk(municipality: str, date: str | None = None):
        at = Date.fromisoformat(date) if date else platform.clock().date()
        level = platform.risk_table.lookup_risk(municipality, at)
        return {"municipality": municipality, "date": at.isoformat(), "level": level.value}

    @app.get("/feedback")
    async def feedback(user: str, window: str = "last_24h"):
        if window not in WINDOWS:
            raise errors.Malformed(f"unknown window {window!r}")
        if user not in platform.users:
            raise errors.NotFound(f"user {user!r} not enrolled")
        metrics = platform.granter.compute_window_metrics(user, window, platform.clock())
        return metrics.to_doc()

    @app.get("/weekly")
    async def weekly(user: str):
        if user not in platform.users:
            raise errors.NotFound(f"user {user!r} not enrolled")
        report = platform.granter.latest_weekly(user)
        if report is None:
            week_end = weekly_boundary_at_or_before(platform.clock())
            report = platform.granter.compose_weekly_report(user, week_end)
        return report.to_doc()

    @app.get("/users")
    async def users():
        return {
            "users": [
                {"user": u.user, "municipality": u.municipality, "group": assign_group(u.user).value}
                for u in platform.users.values()
            ]
        }

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "now": iso(platform.clock())}

    return app
