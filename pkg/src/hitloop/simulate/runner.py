"""Scenario runner: event-driven execution of a virtual cohort against a
fully wired platform.

A single time-ordered action heap drives everything (sensor emissions,
prompt raising, answering, expiry, feedback ticks), and the platform runs
on a virtual clock that jumps from action to action, so a multi-month
study executes in seconds and two runs with the same seed produce
byte-identical event logs.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import logging
import random
from dataclasses import dataclass, field
from datetime import datetime, time, timedelta, timezone
from pathlib import Path
from typing import Any

from ..engagement import PendingPrompt, QuestionnaireKind, ScheduledPrompt
from ..errors import Expired, UnknownPrompt, ValidationFailed
from ..events import SensorEvent, iso
from ..platform import Platform, build_platform
from ..sensing import ActivitySegment
from .agent import Action, answer_delay, generate_day, make_answer
from .clock import VirtualClock
from .profiles import ParticipantProfile, ScenarioConfig, couple_to_timeline

log = logging.getLogger(__name__)

FEEDBACK_TICK = timedelta(minutes=30)


@dataclass
class RunResult:
    platform: Platform
    config: ScenarioConfig
    digest: str
    counts: dict[str, int]
    out_dir: Path | None = None
    events_path: Path | None = None


@dataclass
class _Pending:
    prompt: PendingPrompt
    profile: ParticipantProfile
    rng: random.Random


def run_scenario(
    config: ScenarioConfig,
    out_dir: str | Path | None = None,
    master_seed: int | None = None,
) -> RunResult:
    seed = config.master_seed if master_seed is None else master_seed
    timeline = config.timeline
    start_dt = datetime.combine(timeline.span_start, time(0, 0), tzinfo=timezone.utc)
    clock = VirtualClock(start_dt)
    platform = build_platform(seed=seed, clock=clock, feedback_phase=config.feedback_phase)

    out = Path(out_dir) if out_dir else None
    events_path = None
    log_fh = None
    digest = hashlib.sha256()
    counts = {"events": 0, "skipped_geo": 0, "answer_errors": 0}
    if out:
        out.mkdir(parents=True, exist_ok=True)
        events_path = out / "events.jsonl"
        log_fh = open(events_path, "w", encoding="utf-8")

    def tap(ev: SensorEvent) -> None:
        line = ev.to_json()
        digest.update(line.encode("utf-8"))
        digest.update(b"\n")
        counts["events"] += 1
        if log_fh is not None:
            log_fh.write(line + "\n")

    platform.tap = tap

    profiles = {p.user: p for p in config.participants}
    for profile in config.participants:
        user_key = hashlib.sha256(f"{seed}|homekey|{profile.user}".encode()).digest()
        platform.enroll(
            profile.user,
            municipality=profile.municipality,
            home_ssid=profile.home_ssid,
            api_key=f"key-{seed}-{profile.user}",
            user_key=user_key,
        )

    heap: list[tuple[datetime, int, str, Any]] = []
    seq = 0

    def push(t: datetime, op: str, payload: Any) -> None:
        nonlocal seq
        seq += 1
        heapq.heappush(heap, (t, seq, op, payload))

    # pre-generate the deterministic part of the agenda
    engine = platform.engine
    for day in timeline.days():
        push(datetime.combine(day, time(0, 2), tzinfo=timezone.utc), "expire", None)
        if config.feedback_enabled:
            boundary = datetime.combine(day, time(0, 0), tzinfo=timezone.utc)
            day_end = boundary + timedelta(days=1)
            while boundary < day_end:
                push(boundary, "feedback", None)
                boundary += FEEDBACK_TICK
        for profile in config.participants:
            if not profile.emits:
                continue
            params = couple_to_timeline(profile, timeline, day)
            for sp in engine.plan_daily_prompts(profile.user, day):
                push(sp.due_at, "scheduled", sp)
            day_rng = random.Random(f"{seed}|agent|{profile.user}|{day.isoformat()}")
            for action in generate_day(profile, params, day_rng, detail=config.detail):
                push(action.t, "agent", (profile.user, action))

    def maybe_answer(prompt: PendingPrompt) -> None:
        profile = profiles[prompt.user]
        rng = random.Random(f"{seed}|answer|{prompt.prompt_id}")
        if rng.random() >= profile.compliance:
            return
        push(prompt.raised_at + answer_delay(prompt.kind, rng), "answer",
             _Pending(prompt, profile, rng))

    while heap:
        t, _, op, payload = heapq.heappop(heap)
        clock.advance_to(t)
        if op == "agent":
            user, action = payload
            _run_agent_action(platform, user, action, t, maybe_answer, counts)
        elif op == "scheduled":
            sp: ScheduledPrompt = payload
            fired = engine.fire_scheduled(sp)
            if isinstance(fired, PendingPrompt):
                maybe_answer(fired)
        elif op == "answer":
            pending: _Pending = payload
            params = couple_to_timeline(pending.profile, timeline, pending.prompt.raised_at.date())
            answer = make_answer(pending.profile, params, pending.prompt, pending.rng)
            try:
                engine.submit_answer(pending.prompt.prompt_id, answer, t)
            except (Expired, UnknownPrompt, ValidationFailed) as exc:
                counts["answer_errors"] += 1
                log.debug("answer for %s dropped: %s", pending.prompt.prompt_id, exc)
        elif op == "expire":
            engine.expire_pending(t)
        elif op == "feedback":
            platform.granter.on_tick(t)

    counts["prompts"] = len(engine.prompt_log)
    counts["answers"] = len(engine.answers)
    counts["reminders"] = len(engine.reminders)
    counts["users_emitting"] = sum(1 for p in config.participants if p.emits)
    counts["users_enrolled"] = len(config.participants)

    if log_fh is not None:
        log_fh.close()
    digest_hex = digest.hexdigest()

    if out:
        (out / "config.json").write_text(config.to_json() + "\n", encoding="utf-8")
        (out / "digest.txt").write_text(digest_hex + "\n", encoding="utf-8")
        (out / "counts.json").write_text(json.dumps(counts, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        with open(out / "prompts.jsonl", "w", encoding="utf-8") as fh:
            for prompt in engine.prompt_log:
                fh.write(json.dumps(prompt.to_doc(), sort_keys=True) + "\n")
        with open(out / "answers.jsonl", "w", encoding="utf-8") as fh:
            for record in engine.answers:
                fh.write(json.dumps({
                    "prompt_id": record.prompt_id,
                    "user": record.user,
                    "kind": record.kind.value,
                    "payload": record.payload(),
                    "answered_at": iso(record.answered_at),
                    "discarded": record.discarded,
                }, sort_keys=True) + "\n")
        platform.gateway.dump_registry(str(out / "registry.json"))

    return RunResult(
        platform=platform,
        config=config,
        digest=digest_hex,
        counts=counts,
        out_dir=out,
        events_path=events_path,
    )


def _run_agent_action(
    platform: Platform,
    user: str,
    action: Action,
    now: datetime,
    maybe_answer,
    counts: dict[str, int],
) -> None:
    engine = platform.engine
    if action.op == "measure":
        platform.emit(user, action.data["attribute"], action.data["value"], now)
    elif action.op == "geo_fix":
        if not platform.process_geo_fix(user, action.data["lat"], action.data["lon"], now):
            counts["skipped_geo"] += 1
    elif action.op == "proximity":
        count = int(action.data["count"])
        platform.emit(user, "person_count", count, now)
        prompt = engine.on_proximity(user, count, now)
        if prompt is not None:
            maybe_answer(prompt)
    elif action.op == "vehicle_end":
        segment = ActivitySegment("in_vehicle", action.data["start"], action.data["end"])
        prompt = engine.on_vehicle_episode(user, segment, now)
        if prompt is not None:
            platform.emit(user, "trip_episode", {
                "trip_id": prompt.context["trip_id"],
                "start": iso(segment.start),
                "end": iso(segment.end),
                "seconds": segment.duration.total_seconds(),
            }, now)
            maybe_answer(prompt)
    else:
        raise ValueError(f"unknown agent action {action.op!r}")
