"""Participant profiles and the scenario timeline that couples them to the
public course of the pandemic.

A profile captures one virtual participant's stable traits (home
municipality, emotional baseline, sleep habits, app diet, compliance).
The timeline carries the signed public events and the reopening phases;
coupling a profile to it yields the day's behavioral parameters: outing
rate, expected nearby contacts, app-usage scaling and the mood/sleep
drivers.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from datetime import date as Date
from datetime import timedelta
from pathlib import Path

from ..analysis.timeline import EventTable
from ..errors import Malformed, OutOfSpan

DEFAULT_SPAN = (Date(2021, 2, 1), Date(2021, 5, 13))

DEFAULT_PHASES = {
    Date(2021, 3, 15): "reopen1",
    Date(2021, 4, 5): "reopen2",
    Date(2021, 4, 19): "reopen3",
    Date(2021, 5, 3): "reopen4",
}
BASE_PHASE = "confinement"

DEFAULT_PHASE_LEVELS = {
    "confinement": (0.7, 1.2, 1.25),
    "reopen1": (0.9, 1.6, 1.15),
    "reopen2": (1.1, 2.0, 1.05),
    "reopen3": (1.3, 2.6, 0.95),
    "reopen4": (1.5, 3.0, 0.90),
}

MUNICIPALITY_COORDS = {
    "Lisboa": (38.72, -9.13),
    "Sintra": (38.82, -9.38),
    "Cascais": (38.72, -9.43),
    "Oeiras": (38.72, -9.28),
    "Amadora": (38.77, -9.23),
    "Loures": (38.82, -9.18),
    "Almada": (38.67, -9.18),
    "Setubal": (38.52, -8.88),
}

CATEGORY_PURPOSE = {
    "communication": "communication",
    "social": "leisure",
    "video": "leisure",
    "music": "leisure",
    "games": "leisure",
    "productivity": "work",
    "browser": "research",
    "news": "research",
    "education": "research",
    "navigation": "leisure",
}

TRANSPORT_POOL = ("own_car", "bus", "subway_train_tram", "friend_vehicle", "taxi_tvde", "boat")


@dataclass(frozen=True)
class PhaseLevels:
    outing_rate: float
    contacts_level: float
    usage_multiplier: float


@dataclass(frozen=True)
class TimelineEntry:
    date: Date
    sign: int
    phase: str | None = None


class ScenarioTimeline:
    """Signed public events plus phase switches over a bounded span."""

    def __init__(self, span_start: Date, span_end: Date, entries: list[TimelineEntry]):
        if span_end < span_start:
            raise Malformed("span end precedes span start")
        self.span_start = span_start
        self.span_end = span_end
        self.entries = sorted(entries, key=lambda e: e.date)

    @classmethod
    def default(cls, span: tuple[Date, Date] = DEFAULT_SPAN) -> "ScenarioTimeline":
        table = EventTable.default()
        phases = dict(DEFAULT_PHASES)
        entries = [TimelineEntry(e.date, e.sign, phases.pop(e.date, None)) for e in table]
        # phase switches that do not coincide with a signed event still count
        for day, phase in phases.items():
            entries.append(TimelineEntry(day, 0, phase))
        return cls(span[0], span[1], entries)

    def days(self) -> list[Date]:
        n = (self.span_end - self.span_start).days + 1
        return [self.span_start + timedelta(d) for d in range(n)]

    def phase_on(self, day: Date) -> str:
        phase = BASE_PHASE
        for e in self.entries:
            if e.date > day:
                break
            if e.phase:
                phase = e.phase
        return phase

    def positiveness(self, day: Date) -> int:
        return sum(e.sign for e in self.entries if e.date < day)

    def to_doc(self) -> dict:
        return {
            "span_start": self.span_start.isoformat(),
            "span_end": self.span_end.isoformat(),
            "entries": [
                {"date": e.date.isoformat(), "sign": e.sign, **({"phase": e.phase} if e.phase else {})}
                for e in self.entries
            ],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ScenarioTimeline":
        return cls(
            Date.fromisoformat(doc["span_start"]),
            Date.fromisoformat(doc["span_end"]),
            [
                TimelineEntry(Date.fromisoformat(e["date"]), int(e["sign"]), e.get("phase"))
                for e in doc.get("entries", [])
            ],
        )


@dataclass
class ParticipantProfile:
    user: str
    seed: int
    municipality: str
    home_coord: tuple[float, float]
    home_ssid: str
    emits: bool = True
    compliance: float = 0.85
    valence_base: float = 3.0
    weekend_lift: float = 0.5
    positivity_coupling: float = 0.12
    arousal_base: float = 3.0
    arousal_coupling: float = 0.9
    noise_sd: float = 0.35
    sleep_hours_mean: float = 7.5
    sleep_quality_base: float = 3.0
    sleep_quality_coupling: float = 0.30
    app_minutes: dict[str, float] = field(default_factory=dict)
    app_purposes: dict[str, str] = field(default_factory=dict)
    transport_prefs: tuple[str, ...] = ("own_car", "bus")
    phase_levels: dict[str, PhaseLevels] = field(default_factory=dict)

    def to_doc(self) -> dict:
        doc = asdict(self)
        doc["home_coord"] = list(self.home_coord)
        doc["transport_prefs"] = list(self.transport_prefs)
        doc["phase_levels"] = {k: asdict(v) for k, v in self.phase_levels.items()}
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "ParticipantProfile":
        doc = dict(doc)
        doc["home_coord"] = tuple(doc["home_coord"])
        doc["transport_prefs"] = tuple(doc["transport_prefs"])
        doc["phase_levels"] = {k: PhaseLevels(**v) for k, v in doc.get("phase_levels", {}).items()}
        return cls(**doc)


@dataclass(frozen=True)
class DayParams:
    day: Date
    phase: str
    positiveness: int
    positiveness_lag3: int
    outing_rate: float
    contacts_level: float
    usage_multiplier: float


def couple_to_timeline(profile: ParticipantProfile, timeline: ScenarioTimeline, day: Date) -> DayParams:
    """The day's behavioral parameters for one participant.

    Raises OutOfSpan outside the scenario's date range. Sleep quality is
    driven by the index three days back, which is the whole point of the
    lag analysis downstream.
    """
    if not timeline.span_start <= day <= timeline.span_end:
        raise OutOfSpan(f"{day} outside [{timeline.span_start}, {timeline.span_end}]")
    phase = timeline.phase_on(day)
    levels = profile.phase_levels.get(phase)
    if levels is None:
        base = DEFAULT_PHASE_LEVELS.get(phase, DEFAULT_PHASE_LEVELS[BASE_PHASE])
        levels = PhaseLevels(*base)
    return DayParams(
        day=day,
        phase=phase,
        positiveness=timeline.positiveness(day),
        positiveness_lag3=timeline.positiveness(day - timedelta(days=3)),
        outing_rate=levels.outing_rate,
        contacts_level=levels.contacts_level,
        usage_multiplier=levels.usage_multiplier,
    )


@dataclass
class ScenarioConfig:
    timeline: ScenarioTimeline
    participants: list[ParticipantProfile]
    master_seed: int = 0
    feedback_enabled: bool = False
    feedback_phase: str = "intervention"
    detail: str = "full"  # "full" or "light" (fewer raw sensor events)

    def to_json(self) -> str:
        return json.dumps(
            {
                "timeline": self.timeline.to_doc(),
                "participants": [p.to_doc() for p in self.participants],
                "master_seed": self.master_seed,
                "feedback_enabled": self.feedback_enabled,
                "feedback_phase": self.feedback_phase,
                "detail": self.detail,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        doc = json.loads(text)
        return cls(
            timeline=ScenarioTimeline.from_doc(doc["timeline"]),
            participants=[ParticipantProfile.from_doc(p) for p in doc.get("participants", [])],
            master_seed=int(doc.get("master_seed", 0)),
            feedback_enabled=bool(doc.get("feedback_enabled", False)),
            feedback_phase=str(doc.get("feedback_phase", "intervention")),
            detail=str(doc.get("detail", "full")),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def default_scenario(
    n_enrolled: int = 19,
    n_emitting: int = 14,
    master_seed: int = 0,
    span: tuple[Date, Date] = DEFAULT_SPAN,
    feedback_enabled: bool = False,
    detail: str = "full",
) -> ScenarioConfig:
    """The default cohort: ``n_enrolled`` participants of whom only
    ``n_emitting`` ever start the app; the rest stay silent for the whole
    study."""
    if n_emitting > n_enrolled:
        raise Malformed("cannot have more emitting users than enrolled")
    from ..analysis.series import AppCategoryMap

    catalog = AppCategoryMap.default()
    packages = catalog.packages()
    municipalities = sorted(MUNICIPALITY_COORDS)
    participants: list[ParticipantProfile] = []
    for i in range(n_enrolled):
        user = f"u{i + 1:02d}"
        rng = random.Random(f"{master_seed}|profile|{user}")
        municipality = municipalities[i % len(municipalities)]
        base_lat, base_lon = MUNICIPALITY_COORDS[municipality]
        n_apps = rng.randint(6, 9)
        chosen = rng.sample(packages, n_apps)
        app_minutes = {p: round(rng.uniform(8.0, 55.0), 1) for p in chosen}
        app_purposes = {}
        for p in chosen:
            default = CATEGORY_PURPOSE.get(catalog.category_of(p), "leisure")
            app_purposes[p] = default if rng.random() < 0.9 else rng.choice(
                ("communication", "leisure", "research", "work")
            )
        prefs = tuple(rng.sample(TRANSPORT_POOL, rng.randint(2, 3)))
        levels = {
            phase: PhaseLevels(
                outing_rate=rate * rng.uniform(0.8, 1.2),
                contacts_level=contacts * rng.uniform(0.8, 1.2),
                usage_multiplier=usage * rng.uniform(0.9, 1.1),
            )
            for phase, (rate, contacts, usage) in DEFAULT_PHASE_LEVELS.items()
        }
        participants.append(ParticipantProfile(
            user=user,
            seed=rng.randrange(2**31),
            municipality=municipality,
            home_coord=(round(base_lat + rng.uniform(-0.008, 0.008), 5),
                        round(base_lon + rng.uniform(-0.008, 0.008), 5)),
            home_ssid=f"net-{user}",
            emits=i < n_emitting,
            compliance=rng.uniform(0.78, 0.93),
            valence_base=rng.uniform(2.7, 3.3),
            weekend_lift=rng.uniform(0.3, 0.7),
            positivity_coupling=rng.uniform(0.09, 0.16),
            arousal_base=rng.uniform(2.8, 3.2),
            arousal_coupling=rng.uniform(0.75, 1.05),
            noise_sd=rng.uniform(0.28, 0.42),
            sleep_hours_mean=rng.uniform(6.6, 8.4),
            sleep_quality_base=rng.uniform(2.8, 3.2),
            sleep_quality_coupling=rng.uniform(0.24, 0.36),
            app_minutes=app_minutes,
            app_purposes=app_purposes,
            transport_prefs=prefs,
            phase_levels=levels,
        ))
    return ScenarioConfig(
        timeline=ScenarioTimeline.default(span),
        participants=participants,
        master_seed=master_seed,
        feedback_enabled=feedback_enabled,
        detail=detail,
    )
