"""Composition root: wires the broker, ingest gateway, history store,
questionnaire engine, feedback granter and risk table into one running
platform.

Every measurement, including questionnaire answers, enters through the
gateway with the device's key; nothing writes to the broker behind the
gateway's back. The history store feeds off a wildcard subscription, so
whatever reaches the broker is queryable as a series.
"""

from __future__ import annotations

import logging
import secrets
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from .broker import ContextBroker, Subscription
from .engagement import AnswerRecord, EngagementEngine, QuestionnaireKind
from .errors import NotFound, Offline, UnknownSeries
from .events import SensorEvent
from .feedback import FeedbackGranter, MessageTemplates
from .gateway import DeviceRegistration, IngestGateway, IngestResult, Measurement
from .gazetteer import Gazetteer, GridGazetteer
from .history import HistoryStore, SeriesKey
from .risk import MunicipalRiskLevel, RiskTable, load_municipal_risk
from .sensing import HomeNetworkConfig, resolve_geo_context

log = logging.getLogger(__name__)

TOP_APPS_WINDOW = timedelta(hours=24)
TOP_APPS_N = 5

# Attributes a participant's phone/watch pipeline may write. The gateway
# alias map is the identity over this set.
PARTICIPANT_ATTRIBUTES = (
    "location",
    "activity_segment",
    "person_count",
    "noise_db",
    "app_session",
    "app_usage",
    "steps",
    "heart_rate",
    "sleep_state",
    "geo_context",
    "geo_risk",
    "trip_episode",
    "valence",
    "arousal",
    "sleep_hours",
    "sleep_quality",
    "purpose_answer",
    "reported_contacts",
    "transport_answer",
)


@dataclass
class EnrolledUser:
    user: str
    device_id: str
    api_key: str
    municipality: str
    home_cfg: HomeNetworkConfig


def _data_path(name: str) -> Path:
    ref = resources.files("hitloop.data") / name
    with resources.as_file(ref) as path:
        return Path(path)


def _http_transport(url: str, doc: dict) -> None:
    """Default delivery for URL notification sinks."""
    import httpx

    httpx.post(url, json=doc, timeout=5.0)


@dataclass
class Platform:
    broker: ContextBroker
    gateway: IngestGateway
    history: HistoryStore
    engine: EngagementEngine
    granter: FeedbackGranter
    risk_table: RiskTable
    gazetteer: Gazetteer
    clock: Callable[[], datetime]
    users: dict[str, EnrolledUser] = field(default_factory=dict)
    tap: Callable[[SensorEvent], None] | None = None
    _last_ts: dict[tuple[str, str], datetime] = field(default_factory=dict)

    # -- enrollment -------------------------------------------------------

    def enroll(self, user: str, municipality: str = "Lisboa",
               home_ssid: str | None = None, api_key: str | None = None,
               user_key: bytes | None = None) -> EnrolledUser:
        if user in self.users:
            return self.users[user]
        key = api_key or secrets.token_hex(16)
        device_id = f"dev-{user}"
        self.gateway.register_device(DeviceRegistration(
            device_id=device_id,
            api_key=key,
            target_entity_id=user,
            entity_type="Participant",
            attribute_aliases={a: a for a in PARTICIPANT_ATTRIBUTES},
        ))
        enrolled = EnrolledUser(
            user=user,
            device_id=device_id,
            api_key=key,
            municipality=municipality,
            home_cfg=HomeNetworkConfig(
                home_ssid=home_ssid or f"net-{user}",
                user_key=user_key or secrets.token_bytes(32),
            ),
        )
        self.users[user] = enrolled
        self.granter.track_user(user)
        return enrolled

    # -- measurement path -------------------------------------------------

    def emit(self, user: str, attribute: str, value: Any, t: datetime) -> bool:
        """Send one measurement through the gateway as the user's device.

        Timestamps colliding with an earlier point of the same series are
        nudged forward one second so distinct readings are never silently
        deduplicated. Returns True when the measurement was accepted.
        """
        enrolled = self.users.get(user)
        if enrolled is None:
            raise NotFound(f"user {user!r} not enrolled")
        key = (user, attribute)
        last = self._last_ts.get(key)
        if last is not None and t <= last:
            t = last + timedelta(seconds=1)
        result = self.gateway.ingest(
            enrolled.api_key, enrolled.device_id,
            [Measurement(alias=attribute, value=value, observed_at=t)],
        )
        accepted = result.accepted_count == 1
        if accepted:
            self._last_ts[key] = t
            if self.tap is not None:
                self.tap(SensorEvent(user=user, kind=attribute, payload={"value": value}, t=t))
        else:
            log.debug("measurement skipped for %s/%s: %s", user, attribute, result.skipped)
        return accepted

    def ingest_batch(self, api_key: str, device_id: str, batch: list[Measurement]) -> IngestResult:
        result = self.gateway.ingest(api_key, device_id, batch)
        if self.tap is not None and result.accepted:
            reg = self.gateway.authenticate(api_key, device_id)
            skipped_aliases = {s["alias"] for s in result.skipped}
            for m in batch:
                if m.alias not in skipped_aliases:
                    attribute = reg.attribute_aliases.get(m.alias, m.alias)
                    self.tap(SensorEvent(user=reg.target_entity_id, kind=attribute,
                                         payload={"value": m.value}, t=m.observed_at))
        return result

    def answer_measurements(self, record: AnswerRecord) -> list[tuple[str, Any]]:
        payload = record.payload()
        if record.kind is QuestionnaireKind.SAM_EMOTION:
            return [("valence", payload["valence"]), ("arousal", payload["arousal"])]
        if record.kind is QuestionnaireKind.SLEEP_REPORT:
            return [("sleep_hours", payload["hours"]), ("sleep_quality", payload["quality"])]
        if record.kind is QuestionnaireKind.APP_PURPOSE:
            return [("purpose_answer", {"purposes": payload["purposes"]})]
        if record.kind is QuestionnaireKind.PROXIMITY:
            return [("reported_contacts", payload["people_within_2m"])]
        if record.kind is QuestionnaireKind.TRANSPORT:
            return [("transport_answer", payload)]
        raise NotFound(f"no measurement mapping for {record.kind}")

    def _emit_answer(self, record: AnswerRecord) -> None:
        for attribute, value in self.answer_measurements(record):
            self.emit(record.user, attribute, value, record.answered_at)

    # -- engagement helpers ----------------------------------------------

    def top_apps(self, user: str, now: datetime) -> list[str]:
        try:
            points, _ = self.history.query_raw(
                SeriesKey(user, "app_usage"), t_from=now - TOP_APPS_WINDOW, t_to=now, limit=100_000,
            )
        except UnknownSeries:
            return []
        minutes: dict[str, float] = {}
        for p in points:
            if isinstance(p.value, dict) and "package" in p.value:
                pkg = str(p.value["package"])
                minutes[pkg] = minutes.get(pkg, 0.0) + float(p.value.get("minutes", 0.0))
        ranked = sorted(minutes.items(), key=lambda kv: (-kv[1], kv[0]))
        return [pkg for pkg, _ in ranked[:TOP_APPS_N]]

    def risk_for_municipality(self, municipality: str, at: datetime) -> MunicipalRiskLevel:
        return self.risk_table.lookup_risk(municipality, at)

    def process_geo_fix(self, user: str, lat: float, lon: float, t: datetime) -> bool:
        """Resolve, anonymize and store a location fix; False if discarded."""
        enrolled = self.users.get(user)
        if enrolled is None:
            raise NotFound(f"user {user!r} not enrolled")
        try:
            tokens = resolve_geo_context(
                lat, lon, self.gazetteer,
                risk_client=lambda muni: self.risk_table.lookup_risk(muni, t),
                cfg=enrolled.home_cfg,
            )
        except (Offline, NotFound):
            return False
        doc = {
            "district_token": tokens.district_token,
            "municipality_token": tokens.municipality_token,
            "parish_token": tokens.parish_token,
            "risk_level": tokens.risk_level.value if tokens.risk_level else None,
        }
        self.emit(user, "geo_context", doc, t)
        if tokens.risk_level is not None:
            self.emit(user, "geo_risk", tokens.risk_level.value, t)
        return True


def build_platform(
    persist_dir: str | Path | None = None,
    seed: int = 0,
    clock: Callable[[], datetime] | None = None,
    feedback_phase: str = "intervention",
    risk_csv: str | Path | None = None,
    gazetteer_csv: str | Path | None = None,
    templates: MessageTemplates | None = None,
) -> Platform:
    clock = clock or (lambda: datetime.now(timezone.utc))
    persist = Path(persist_dir) if persist_dir else None
    if persist:
        persist.mkdir(parents=True, exist_ok=True)
    broker = ContextBroker(
        wal_path=str(persist / "broker.wal") if persist else None,
        delivery="sync",
        clock=clock,
        transport=_http_transport,
    )
    history = HistoryStore(persist_dir=str(persist / "history") if persist else None)
    broker.create_subscription(Subscription(
        entity_type_filter="Participant",
        watched_attributes=frozenset(),
        sink=history.on_notification,
        sub_id="history-feed",
    ))
    gateway = IngestGateway(broker, clock=clock)
    risk_table = load_municipal_risk(str(risk_csv or _data_path("municipal_risk.csv")))
    gazetteer = GridGazetteer.from_csv(str(gazetteer_csv or _data_path("gazetteer_grid.csv")))
    granter = FeedbackGranter(history, broker=broker, templates=templates, phase=feedback_phase)
    platform = Platform(
        broker=broker,
        gateway=gateway,
        history=history,
        engine=EngagementEngine(seed=seed),
        granter=granter,
        risk_table=risk_table,
        gazetteer=gazetteer,
        clock=clock,
    )
    platform.engine.bind(emitter=platform._emit_answer, top_apps=platform.top_apps)
    return platform
