"""Shared fixtures and builders for the test suite.

The two session-scoped simulation runs are expensive relative to everything
else here, so they are built once and shared: ``default_run`` is the stock
cohort with feedback publication off, ``feedback_run`` is a smaller cohort
with the feedback loop ticking every 30 minutes.
"""

from __future__ import annotations

from datetime import date, datetime, timezone

import pytest

from hitloop.broker import AttributeValue, ContextEntity
from hitloop.simulate.profiles import default_scenario
from hitloop.simulate.runner import RunResult, run_scenario


def utc(year: int, month: int, day: int, hour: int = 0, minute: int = 0,
        second: int = 0, microsecond: int = 0) -> datetime:
    return datetime(year, month, day, hour, minute, second, microsecond,
                    tzinfo=timezone.utc)


def make_entity(entity_id: str, attrs: dict, entity_type: str = "Participant") -> ContextEntity:
    """attrs maps attribute name -> (value, observed_at)."""
    return ContextEntity(
        id=entity_id,
        entity_type=entity_type,
        attributes={name: AttributeValue(value, ts) for name, (value, ts) in attrs.items()},
    )


class CollectSink:
    """Subscription sink that records every notification it receives."""

    def __init__(self, fail_times: int = 0):
        self.notifications = []
        self._fail_times = fail_times

    def __call__(self, notification) -> None:
        if self._fail_times > 0:
            self._fail_times -= 1
            raise RuntimeError("sink unavailable")
        self.notifications.append(notification)


@pytest.fixture(scope="session")
def default_run(tmp_path_factory) -> RunResult:
    out = tmp_path_factory.mktemp("default-run")
    return run_scenario(default_scenario(), out_dir=out, master_seed=0)


@pytest.fixture(scope="session")
def feedback_run(tmp_path_factory) -> RunResult:
    out = tmp_path_factory.mktemp("feedback-run")
    config = default_scenario(
        n_enrolled=10,
        n_emitting=10,
        span=(date(2021, 2, 1), date(2021, 2, 28)),
        feedback_enabled=True,
    )
    return run_scenario(config, out_dir=out, master_seed=0)
