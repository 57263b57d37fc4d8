"""Per-day behavior generation for one virtual participant.

Everything here is a pure function of (profile, day parameters, rng), so a
scenario replays bit-identically from its seed. The generated actions are
interpreted by the runner: plain measurements, geo fixes, proximity scans
and vehicle episode ends (the latter two can raise questionnaires).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from datetime import date as Date
from datetime import datetime, time, timedelta, timezone
from typing import Any

from ..engagement import (
    PendingPrompt,
    ProximityAnswer,
    PurposeAnswer,
    QuestionnaireKind,
    SamAnswer,
    SleepAnswer,
    TransportAnswer,
    TRANSPORT_BUCKETS,
)
from ..history import ORDINAL_SLEEP_QUALITY
from .profiles import CATEGORY_PURPOSE, DayParams, ParticipantProfile

OUTING_SLOTS = (time(9, 30), time(13, 0), time(16, 30))

_BUCKET_WEIGHTS = {
    ("0", "1", "2", ">2"): (0.45, 0.30, 0.15, 0.10),
    ("<10", "10-20", "20-30", ">30"): (0.55, 0.25, 0.12, 0.08),
    ("<10", "10-30", "30-50", ">50"): (0.55, 0.25, 0.12, 0.08),
}


@dataclass(frozen=True)
class Action:
    t: datetime
    op: str  # "measure" | "geo_fix" | "proximity" | "vehicle_end"
    data: dict[str, Any]


def _at(day: Date, t: time) -> datetime:
    return datetime.combine(day, t, tzinfo=timezone.utc)


def _poisson(rng: random.Random, lam: float) -> int:
    if lam <= 0:
        return 0
    threshold = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


def _seg_doc(label: str, start: datetime, end: datetime) -> dict[str, Any]:
    from ..events import iso

    return {"label": label, "start": iso(start), "end": iso(end)}


def generate_day(
    profile: ParticipantProfile,
    params: DayParams,
    rng: random.Random,
    detail: str = "full",
) -> list[Action]:
    """The day's sensor timeline: sleep classifications, outings with
    activity segments and scans, app usage, watch samples."""
    day = params.day
    actions: list[Action] = []
    full = detail != "light"

    # overnight sleep classifications (ground truth for the sleep pipeline)
    for t_sleep in ((time(2, 10), time(4, 40)) if full else (time(3, 20),)):
        actions.append(Action(_at(day, t_sleep), "measure", {
            "attribute": "sleep_state",
            "value": {"asleep": True, "confidence": round(rng.uniform(70.0, 97.0), 1)},
        }))

    wake = _at(day, time(7, 20)) + timedelta(minutes=rng.uniform(-25, 25))
    actions.append(Action(wake, "measure", {"attribute": "location", "value": "home"}))

    n_outings = min(3, _poisson(rng, params.outing_rate))
    for slot_idx in range(n_outings):
        start = _at(day, OUTING_SLOTS[slot_idx]) + timedelta(minutes=rng.uniform(-40, 40))
        duration = timedelta(minutes=rng.uniform(25, 110))
        end = start + duration
        actions.append(Action(start, "measure", {"attribute": "location", "value": "other"}))

        walk_out = timedelta(minutes=rng.uniform(3, 7))
        cursor = start + walk_out
        actions.append(Action(cursor, "measure", {
            "attribute": "activity_segment", "value": _seg_doc("walking", start, cursor),
        }))
        if rng.random() < 0.5:
            v_len = timedelta(seconds=min(rng.uniform(90, 700), duration.total_seconds() * 0.4))
            v_end = cursor + v_len
            actions.append(Action(v_end, "measure", {
                "attribute": "activity_segment", "value": _seg_doc("in_vehicle", cursor, v_end),
            }))
            actions.append(Action(v_end, "vehicle_end", {"start": cursor, "end": v_end}))
            cursor = v_end
            if rng.random() < 0.25:
                gap = timedelta(minutes=rng.uniform(4, 12))
                v2_len = timedelta(seconds=min(rng.uniform(130, 500), duration.total_seconds() * 0.3))
                v2_start = cursor + gap
                v2_end = v2_start + v2_len
                actions.append(Action(v2_end, "measure", {
                    "attribute": "activity_segment", "value": _seg_doc("in_vehicle", v2_start, v2_end),
                }))
                actions.append(Action(v2_end, "vehicle_end", {"start": v2_start, "end": v2_end}))
                cursor = v2_end

        mid = cursor + (end - cursor) / 2
        actions.append(Action(mid, "proximity", {"count": _poisson(rng, params.contacts_level)}))
        if full or slot_idx == 0:
            lat, lon = profile.home_coord
            actions.append(Action(mid + timedelta(minutes=1), "geo_fix", {
                "lat": lat + rng.uniform(-0.008, 0.008),
                "lon": lon + rng.uniform(-0.008, 0.008),
            }))

        walk_back = timedelta(minutes=rng.uniform(3, 7))
        still_end = end - walk_back
        if still_end > cursor:
            actions.append(Action(still_end, "measure", {
                "attribute": "activity_segment", "value": _seg_doc("still", cursor, still_end),
            }))
        actions.append(Action(end, "measure", {
            "attribute": "activity_segment", "value": _seg_doc("walking", max(still_end, cursor), end),
        }))
        actions.append(Action(end, "measure", {"attribute": "location", "value": "home"}))

    # evening bookkeeping: daily app usage records (staggered one second
    # apart so each package keeps a distinct series timestamp)
    usage_base = _at(day, time(23, 45))
    offset = 0
    for package in sorted(profile.app_minutes):
        if rng.random() < 0.10:
            continue
        minutes = round(profile.app_minutes[package] * params.usage_multiplier * rng.uniform(0.7, 1.3), 1)
        if minutes <= 0:
            continue
        actions.append(Action(usage_base + timedelta(seconds=offset), "measure", {
            "attribute": "app_usage", "value": {"package": package, "minutes": minutes},
        }))
        offset += 1
        if full:
            for session_start, session_minutes in _split_sessions(day, minutes, rng):
                actions.append(Action(session_start + timedelta(minutes=session_minutes), "measure", {
                    "attribute": "app_session",
                    "value": {
                        "package": package,
                        "start": _iso(session_start),
                        "end": _iso(session_start + timedelta(minutes=session_minutes)),
                    },
                }))

    noise_times = (time(8, 30), time(14, 30), time(21, 30)) if full else (time(14, 30),)
    for t_noise in noise_times:
        actions.append(Action(_at(day, t_noise), "measure", {
            "attribute": "noise_db",
            "value": round(min(75.0, max(30.0, rng.gauss(47.0, 6.0))), 1),
        }))

    hr_times = (time(9, 15), time(15, 15), time(21, 15)) if full else (time(15, 15),)
    for t_hr in hr_times:
        actions.append(Action(_at(day, t_hr), "measure", {
            "attribute": "heart_rate",
            "value": round(min(110.0, max(48.0, rng.gauss(68.0, 7.0))), 1),
        }))

    steps = 0
    step_times = (time(11, 59), time(17, 59), time(23, 29)) if full else (time(23, 29),)
    for t_steps in step_times:
        steps += max(0, int(rng.gauss(2200 + 900 * n_outings, 700)))
        actions.append(Action(_at(day, t_steps), "measure", {"attribute": "steps", "value": steps}))

    actions.sort(key=lambda a: a.t)
    return actions


def _split_sessions(day: Date, minutes: float, rng: random.Random) -> list[tuple[datetime, float]]:
    windows = (time(10, 0), time(20, 0))
    if minutes < 12 or rng.random() < 0.35:
        start = _at(day, rng.choice(windows)) + timedelta(minutes=rng.uniform(0, 90))
        return [(start, minutes)]
    first = round(minutes * rng.uniform(0.35, 0.65), 1)
    out = []
    for window, part in zip(windows, (first, round(minutes - first, 1))):
        out.append((_at(day, window) + timedelta(minutes=rng.uniform(0, 90)), part))
    return out


def _iso(ts: datetime) -> str:
    from ..events import iso

    return iso(ts)


# -- questionnaire answer content -----------------------------------------

def make_answer(profile: ParticipantProfile, params: DayParams,
                prompt: PendingPrompt, rng: random.Random):
    if prompt.kind is QuestionnaireKind.SAM_EMOTION:
        weekend = 1.0 if params.day.weekday() >= 5 else 0.0
        valence_f = (
            profile.valence_base
            + profile.weekend_lift * weekend
            + profile.positivity_coupling * params.positiveness
            + rng.gauss(0.0, profile.noise_sd)
        )
        valence = min(5, max(1, round(valence_f)))
        arousal_f = (
            profile.arousal_base
            - profile.arousal_coupling * (valence_f - 3.0)
            + rng.gauss(0.0, profile.noise_sd * 0.6)
        )
        return SamAnswer(valence=valence, arousal=min(5, max(1, round(arousal_f))))

    if prompt.kind is QuestionnaireKind.SLEEP_REPORT:
        hours = min(10.5, max(4.0, rng.gauss(profile.sleep_hours_mean, 0.55)))
        bed_dt = datetime.combine(params.day, time(23, 0), tzinfo=timezone.utc) + timedelta(
            minutes=rng.uniform(-45, 50)
        )
        wake_dt = bed_dt + timedelta(hours=hours)
        quality_f = (
            profile.sleep_quality_base
            + profile.sleep_quality_coupling * params.positiveness_lag3
            + rng.gauss(0.0, 0.28)
        )
        ordinal = min(5, max(1, round(quality_f)))
        return SleepAnswer(
            bed_time=bed_dt.time().replace(second=0, microsecond=0),
            wake_time=wake_dt.time().replace(second=0, microsecond=0),
            quality=ORDINAL_SLEEP_QUALITY[ordinal],
        )

    if prompt.kind is QuestionnaireKind.APP_PURPOSE:
        purposes = {}
        for package in prompt.context.get("top_apps", []):
            habitual = profile.app_purposes.get(package) or CATEGORY_PURPOSE.get("other", "leisure")
            if rng.random() < 0.08:
                habitual = rng.choice(("communication", "leisure", "research", "work"))
            purposes[package] = habitual
        return PurposeAnswer(purposes=purposes)

    if prompt.kind is QuestionnaireKind.PROXIMITY:
        seen = int(prompt.context.get("person_count", 3))
        return ProximityAnswer(people_within_2m=max(0, seen - rng.randint(0, 2)))

    if prompt.kind is QuestionnaireKind.TRANSPORT:
        transport = rng.choice(profile.transport_prefs)
        buckets = TRANSPORT_BUCKETS[transport]
        weights = _BUCKET_WEIGHTS[buckets]
        bucket = rng.choices(buckets, weights=weights, k=1)[0]
        return TransportAnswer(transport=transport, people_bucket=bucket)

    raise ValueError(f"no answer model for {prompt.kind}")


def answer_delay(kind: QuestionnaireKind, rng: random.Random) -> timedelta:
    if kind in (QuestionnaireKind.PROXIMITY, QuestionnaireKind.TRANSPORT):
        return timedelta(minutes=rng.uniform(1.0, 25.0))
    return timedelta(minutes=rng.uniform(4.0, 200.0))
