"""Questionnaire engine: daily schedules, opportunistic triggers, answer
validation, expiry.

Per user per day there are three scheduled questionnaires (emotion scale at
a random minute in 14:00-20:00, app purpose at 14:00, sleep report at
10:00) plus a 16:00 reminder listing whatever is still unanswered. On top
of that, context raises opportunistic prompts: a proximity questionnaire
when more than two person-devices are nearby (one hour cooldown) and a
transport questionnaire whenever an in-vehicle episode longer than two
minutes ends. Pending prompts live exactly 24 hours.

Scheduling randomness comes from a per-(user, day) seeded stream, so the
full prompt schedule for a given engine seed is bit-identical across runs.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field, replace
from datetime import date as Date
from datetime import datetime, time, timedelta, timezone
from enum import Enum
from typing import Any, Callable

from .errors import Expired, Malformed, UnknownPrompt, ValidationFailed
from .events import iso
from .history import SLEEP_QUALITY_ORDINAL
from .sensing import ActivitySegment

PROMPT_VALIDITY = timedelta(hours=24)
PROXIMITY_COOLDOWN = timedelta(hours=1)
PROXIMITY_MIN_PERSONS = 2  # prompt requires strictly more than this
TRIP_CHAIN_GAP = timedelta(minutes=15)

SAM_WINDOW_START = time(14, 0)
SAM_WINDOW_MINUTES = 6 * 60  # [14:00, 20:00)
PURPOSE_AT = time(14, 0)
SLEEP_AT = time(10, 0)
REMINDER_AT = time(16, 0)

PURPOSES = ("communication", "leisure", "research", "work")

TRANSPORT_BUCKETS: dict[str, tuple[str, ...]] = {
    "own_car": ("0", "1", "2", ">2"),
    "friend_vehicle": ("0", "1", "2", ">2"),
    "taxi_tvde": ("0", "1", "2", ">2"),
    "bus": ("<10", "10-20", "20-30", ">30"),
    "subway_train_tram": ("<10", "10-20", "20-30", ">30"),
    "boat": ("<10", "10-30", "30-50", ">50"),
}
TRANSPORT_TYPES = tuple(TRANSPORT_BUCKETS)


class QuestionnaireKind(str, Enum):
    SAM_EMOTION = "sam_emotion"
    SLEEP_REPORT = "sleep_report"
    APP_PURPOSE = "app_purpose"
    PROXIMITY = "proximity"
    TRANSPORT = "transport"


REMINDER = "reminder"


@dataclass(frozen=True)
class ScheduledPrompt:
    user: str
    kind: str  # QuestionnaireKind value or "reminder"
    due_at: datetime


@dataclass(frozen=True)
class PendingPrompt:
    prompt_id: str
    user: str
    kind: QuestionnaireKind
    raised_at: datetime
    expires_at: datetime
    context: dict[str, Any] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {
            "prompt_id": self.prompt_id,
            "user": self.user,
            "kind": self.kind.value,
            "raised_at": iso(self.raised_at),
            "expires_at": iso(self.expires_at),
            "context": self.context,
        }


# -- answers ---------------------------------------------------------------

@dataclass(frozen=True)
class SamAnswer:
    valence: int
    arousal: int


@dataclass(frozen=True)
class SleepAnswer:
    bed_time: time
    wake_time: time
    quality: str

    def duration_hours(self) -> float:
        bed = self.bed_time.hour + self.bed_time.minute / 60.0
        wake = self.wake_time.hour + self.wake_time.minute / 60.0
        return wake - bed if wake > bed else 24.0 - (bed - wake)


@dataclass(frozen=True)
class PurposeAnswer:
    purposes: dict[str, str]  # package -> purpose, keys must equal the prompt's list


@dataclass(frozen=True)
class ProximityAnswer:
    people_within_2m: int


@dataclass(frozen=True)
class TransportAnswer:
    transport: str
    people_bucket: str
    trip_id: str = ""


Answer = SamAnswer | SleepAnswer | PurposeAnswer | ProximityAnswer | TransportAnswer

_ANSWER_KIND = {
    SamAnswer: QuestionnaireKind.SAM_EMOTION,
    SleepAnswer: QuestionnaireKind.SLEEP_REPORT,
    PurposeAnswer: QuestionnaireKind.APP_PURPOSE,
    ProximityAnswer: QuestionnaireKind.PROXIMITY,
    TransportAnswer: QuestionnaireKind.TRANSPORT,
}


@dataclass
class AnswerRecord:
    prompt_id: str
    user: str
    kind: QuestionnaireKind
    answer: Answer
    answered_at: datetime
    discarded: bool = False

    def payload(self) -> dict[str, Any]:
        a = self.answer
        if isinstance(a, SamAnswer):
            return {"valence": a.valence, "arousal": a.arousal}
        if isinstance(a, SleepAnswer):
            return {
                "bed_time": a.bed_time.isoformat(timespec="minutes"),
                "wake_time": a.wake_time.isoformat(timespec="minutes"),
                "quality": a.quality,
                "hours": round(a.duration_hours(), 4),
            }
        if isinstance(a, PurposeAnswer):
            return {"purposes": dict(a.purposes)}
        if isinstance(a, ProximityAnswer):
            return {"people_within_2m": a.people_within_2m}
        if isinstance(a, TransportAnswer):
            return {"transport": a.transport, "people_bucket": a.people_bucket, "trip_id": a.trip_id}
        raise TypeError(f"unknown answer type {type(a)}")


@dataclass(frozen=True)
class ReminderEvent:
    user: str
    at: datetime
    pending_prompt_ids: tuple[str, ...]


def validate_answer(kind: QuestionnaireKind, answer: Answer, context: dict[str, Any]) -> None:
    expected = _ANSWER_KIND.get(type(answer))
    if expected is not kind:
        raise ValidationFailed(f"answer type {type(answer).__name__} does not fit {kind.value}")
    if isinstance(answer, SamAnswer):
        for name, v in (("valence", answer.valence), ("arousal", answer.arousal)):
            if not isinstance(v, int) or not 1 <= v <= 5:
                raise ValidationFailed(f"{name} must be an integer in 1..5, got {v!r}")
    elif isinstance(answer, SleepAnswer):
        if answer.quality not in SLEEP_QUALITY_ORDINAL:
            raise ValidationFailed(f"unknown sleep quality {answer.quality!r}")
        hours = answer.duration_hours()
        if not 0 < hours < 24:
            raise ValidationFailed(f"sleep duration {hours}h outside (0, 24)")
    elif isinstance(answer, PurposeAnswer):
        prompted = context.get("top_apps", [])
        if sorted(answer.purposes) != sorted(prompted):
            raise ValidationFailed("purpose answer keys must equal the prompted app list")
        for pkg, purpose in answer.purposes.items():
            if purpose not in PURPOSES:
                raise ValidationFailed(f"unknown purpose {purpose!r} for {pkg}")
    elif isinstance(answer, ProximityAnswer):
        if not isinstance(answer.people_within_2m, int) or answer.people_within_2m < 0:
            raise ValidationFailed("people_within_2m must be a non-negative integer")
    elif isinstance(answer, TransportAnswer):
        buckets = TRANSPORT_BUCKETS.get(answer.transport)
        if buckets is None:
            raise ValidationFailed(f"unknown transport type {answer.transport!r}")
        if answer.people_bucket not in buckets:
            raise ValidationFailed(
                f"bucket {answer.people_bucket!r} invalid for {answer.transport} (allowed: {buckets})"
            )
        expected_trip = context.get("trip_id")
        if answer.trip_id and expected_trip and answer.trip_id != expected_trip:
            raise ValidationFailed("trip_id does not match the prompt's trip")


def dedupe_transport(answers: list[AnswerRecord]) -> AnswerRecord:
    """Latest-by-timestamp answer of a trip chain wins; earlier ones are
    marked discarded in place (retained for the log, excluded downstream)."""
    if not answers:
        raise Malformed("empty transport chain")
    latest = max(answers, key=lambda r: (r.answered_at, r.prompt_id))
    for rec in answers:
        rec.discarded = rec is not latest
    return latest


@dataclass
class _UserTriggers:
    last_proximity_prompt_at: datetime | None = None
    trip_seq: int = 0
    open_trip_id: str | None = None
    open_trip_last_end: datetime | None = None


class EngagementEngine:
    def __init__(
        self,
        seed: int = 0,
        emitter: Callable[[AnswerRecord], None] | None = None,
        top_apps: Callable[[str, datetime], list[str]] | None = None,
    ):
        self._seed = seed
        self._emitter = emitter
        self._top_apps = top_apps
        self._lock = threading.RLock()
        self._pending: dict[str, PendingPrompt] = {}
        self._expired_ids: set[str] = set()
        self._answered_ids: set[str] = set()
        self._triggers: dict[str, _UserTriggers] = {}
        self._counter = 0
        self.prompt_log: list[PendingPrompt] = []
        self.answers: list[AnswerRecord] = []
        self.reminders: list[ReminderEvent] = []
        self._trip_answers: dict[tuple[str, str], list[AnswerRecord]] = {}

    def bind(
        self,
        emitter: Callable[[AnswerRecord], None] | None = None,
        top_apps: Callable[[str, datetime], list[str]] | None = None,
    ) -> None:
        """Late-bind the answer emitter and top-apps provider (the platform
        wires these after construction to avoid a dependency cycle)."""
        if emitter is not None:
            self._emitter = emitter
        if top_apps is not None:
            self._top_apps = top_apps

    # -- scheduling -------------------------------------------------------

    def day_rng(self, user: str, day: Date) -> random.Random:
        return random.Random(f"{self._seed}|{user}|{day.isoformat()}")

    def plan_daily_prompts(self, user: str, day: Date, rng: random.Random | None = None) -> list[ScheduledPrompt]:
        """The day's schedule: emotion scale at a random minute in
        [14:00, 20:00), purpose at 14:00, sleep report at 10:00, and the
        16:00 reminder. Pure given (engine seed, user, day)."""
        rng = rng or self.day_rng(user, day)
        sam_minute = rng.randrange(SAM_WINDOW_MINUTES)
        sam_at = _at(day, SAM_WINDOW_START) + timedelta(minutes=sam_minute)
        return [
            ScheduledPrompt(user, QuestionnaireKind.SLEEP_REPORT.value, _at(day, SLEEP_AT)),
            ScheduledPrompt(user, QuestionnaireKind.APP_PURPOSE.value, _at(day, PURPOSE_AT)),
            ScheduledPrompt(user, QuestionnaireKind.SAM_EMOTION.value, sam_at),
            ScheduledPrompt(user, REMINDER, _at(day, REMINDER_AT)),
        ]

    def raise_prompt(self, user: str, kind: QuestionnaireKind, now: datetime,
                     context: dict[str, Any] | None = None) -> PendingPrompt:
        with self._lock:
            context = dict(context or {})
            if kind is QuestionnaireKind.APP_PURPOSE and "top_apps" not in context:
                context["top_apps"] = list(self._top_apps(user, now)) if self._top_apps else []
            self._counter += 1
            prompt = PendingPrompt(
                prompt_id=f"p{self._counter:07d}",
                user=user,
                kind=kind,
                raised_at=now,
                expires_at=now + PROMPT_VALIDITY,
                context=context,
            )
            self._pending[prompt.prompt_id] = prompt
            self.prompt_log.append(prompt)
            return prompt

    def fire_scheduled(self, sp: ScheduledPrompt) -> PendingPrompt | ReminderEvent:
        if sp.kind == REMINDER:
            return self.fire_reminder(sp.user, sp.due_at)
        return self.raise_prompt(sp.user, QuestionnaireKind(sp.kind), sp.due_at)

    def fire_reminder(self, user: str, now: datetime) -> ReminderEvent:
        pending = self.list_pending(user, now)
        ev = ReminderEvent(user, now, tuple(p.prompt_id for p in pending))
        self.reminders.append(ev)
        return ev

    # -- opportunistic triggers -------------------------------------------

    def on_proximity(self, user: str, person_count: int, now: datetime) -> PendingPrompt | None:
        with self._lock:
            if person_count <= PROXIMITY_MIN_PERSONS:
                return None
            st = self._triggers.setdefault(user, _UserTriggers())
            last = st.last_proximity_prompt_at
            if last is not None and now - last < PROXIMITY_COOLDOWN:
                return None
            st.last_proximity_prompt_at = now
        return self.raise_prompt(user, QuestionnaireKind.PROXIMITY, now,
                                 context={"person_count": person_count})

    def on_vehicle_episode(self, user: str, episode: ActivitySegment, now: datetime) -> PendingPrompt | None:
        """Raise a transport prompt for a qualifying in-vehicle episode.

        Episodes whose start falls within 15 minutes of the previous
        episode's end continue the same trip chain.
        """
        if episode.label != "in_vehicle" or episode.end is None:
            return None
        with self._lock:
            st = self._triggers.setdefault(user, _UserTriggers())
            if (
                st.open_trip_id is not None
                and st.open_trip_last_end is not None
                and episode.start - st.open_trip_last_end < TRIP_CHAIN_GAP
            ):
                trip_id = st.open_trip_id
            else:
                st.trip_seq += 1
                trip_id = f"{user}-trip{st.trip_seq:04d}"
                st.open_trip_id = trip_id
            st.open_trip_last_end = episode.end
        return self.raise_prompt(user, QuestionnaireKind.TRANSPORT, now,
                                 context={"trip_id": trip_id,
                                          "episode_seconds": episode.duration.total_seconds()})

    # -- answers ----------------------------------------------------------

    def submit_answer(self, prompt_id: str, answer: Answer, now: datetime) -> AnswerRecord:
        with self._lock:
            prompt = self._pending.get(prompt_id)
            if prompt is None:
                if prompt_id in self._expired_ids:
                    raise Expired(f"prompt {prompt_id} expired")
                raise UnknownPrompt(f"prompt {prompt_id!r} is not pending")
            if now >= prompt.expires_at:
                del self._pending[prompt_id]
                self._expired_ids.add(prompt_id)
                raise Expired(f"prompt {prompt_id} expired at {iso(prompt.expires_at)}")
            validate_answer(prompt.kind, answer, prompt.context)
            if isinstance(answer, TransportAnswer) and not answer.trip_id:
                answer = replace(answer, trip_id=prompt.context.get("trip_id", ""))
            record = AnswerRecord(prompt_id, prompt.user, prompt.kind, answer, now)
            del self._pending[prompt_id]
            self._answered_ids.add(prompt_id)
            self.answers.append(record)
            if isinstance(answer, TransportAnswer) and answer.trip_id:
                chain = self._trip_answers.setdefault((prompt.user, answer.trip_id), [])
                chain.append(record)
                dedupe_transport(chain)
        if self._emitter is not None:
            self._emitter(record)
        return record

    def trip_chain(self, user: str, trip_id: str) -> list[AnswerRecord]:
        with self._lock:
            return list(self._trip_answers.get((user, trip_id), []))

    # -- lifecycle --------------------------------------------------------

    def expire_pending(self, now: datetime) -> list[str]:
        with self._lock:
            doomed = [pid for pid, p in self._pending.items() if p.expires_at <= now]
            for pid in doomed:
                del self._pending[pid]
                self._expired_ids.add(pid)
            return doomed

    def list_pending(self, user: str, now: datetime) -> list[PendingPrompt]:
        with self._lock:
            return sorted(
                (p for p in self._pending.values() if p.user == user and p.expires_at > now),
                key=lambda p: (p.raised_at, p.prompt_id),
            )


def _at(day: Date, t: time) -> datetime:
    return datetime.combine(day, t, tzinfo=timezone.utc)
