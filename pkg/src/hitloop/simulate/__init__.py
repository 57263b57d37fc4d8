"""Deterministic cohort simulator: virtual clock, participant profiles
coupled to the public-events timeline, and the scenario runner."""

from .clock import VirtualClock
from .profiles import (
    DayParams,
    ParticipantProfile,
    PhaseLevels,
    ScenarioConfig,
    ScenarioTimeline,
    couple_to_timeline,
    default_scenario,
)
from .runner import RunResult, run_scenario

__all__ = [
    "DayParams",
    "ParticipantProfile",
    "PhaseLevels",
    "RunResult",
    "ScenarioConfig",
    "ScenarioTimeline",
    "VirtualClock",
    "couple_to_timeline",
    "default_scenario",
    "run_scenario",
]
