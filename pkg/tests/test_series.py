from __future__ import annotations

import random
from datetime import date, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import utc

from hitloop import errors
from hitloop.analysis.series import (
    BUCKET_REPRESENTATIVE,
    PERIOD_CUT,
    AppCategoryMap,
    aggregate_app_usage,
    daily_mean_by_user,
    fuse_daily_contacts,
    purpose_percentages,
    split_periods,
    work_overlap_seconds,
    work_split,
)

D1 = date(2021, 2, 1)


def test_two_stage_daily_mean():
    """Two answers from u1 average within the user before averaging across
    users: ((3+5)/2 + 4) / 2 = 4.0, not (3+5+4)/3."""
    records = [
        ("u1", utc(2021, 2, 1, 14), 3.0),
        ("u1", utc(2021, 2, 1, 19), 5.0),
        ("u2", utc(2021, 2, 1, 15), 4.0),
    ]
    assert daily_mean_by_user(records) == {D1: 4.0}


def test_daily_mean_groups_by_calendar_day():
    records = [
        ("u1", utc(2021, 2, 1, 23), 2.0),
        ("u1", utc(2021, 2, 2, 1), 4.0),
    ]
    assert daily_mean_by_user(records) == {D1: 2.0, date(2021, 2, 2): 4.0}


@settings(max_examples=50)
@given(st.lists(
    st.tuples(st.sampled_from(["u1", "u2", "u3"]),
              st.integers(min_value=0, max_value=6 * 24),
              st.floats(min_value=1, max_value=5, allow_nan=False)),
    min_size=1, max_size=60,
))
def test_daily_mean_invariant_under_record_order(rows):
    records = [(u, utc(2021, 2, 1) + timedelta(hours=h), v) for u, h, v in rows]
    shuffled = list(records)
    random.Random(0).shuffle(shuffled)
    a, b = daily_mean_by_user(records), daily_mean_by_user(shuffled)
    assert set(a) == set(b)
    for day in a:  # reordering may perturb float sums in the last ulp
        assert a[day] == pytest.approx(b[day], rel=1e-12)


def test_split_periods_boundary_day_goes_after():
    series = {PERIOD_CUT - timedelta(days=1): 1.0, PERIOD_CUT: 2.0, PERIOD_CUT + timedelta(days=1): 3.0}
    before, after = split_periods(series)
    assert set(before) == {PERIOD_CUT - timedelta(days=1)}
    assert set(after) == {PERIOD_CUT, PERIOD_CUT + timedelta(days=1)}


# -- working-hours split ---------------------------------------------------

def test_work_overlap_spans_lunch_break():
    """A weekday 11:00-13:00 session is half work (11-12) and half not."""
    start, end = utc(2021, 2, 1, 11), utc(2021, 2, 1, 13)  # a Monday
    assert work_overlap_seconds(start, end) == 3600.0


def test_weekend_sessions_are_all_nonwork():
    start, end = utc(2021, 2, 6, 10), utc(2021, 2, 6, 11)  # a Saturday
    assert work_overlap_seconds(start, end) == 0.0


def test_work_overlap_crosses_midnight():
    start, end = utc(2021, 2, 1, 17), utc(2021, 2, 2, 9)  # Mon 17:00 -> Tue 09:00
    assert work_overlap_seconds(start, end) == 3600.0 + 3600.0


def test_work_split_example():
    out = work_split([("app.mail", utc(2021, 2, 1, 11), utc(2021, 2, 1, 13))])
    work, nonwork = out["app.mail"]
    assert work == 60.0
    assert nonwork == 60.0


def test_work_split_rejects_negative_sessions():
    with pytest.raises(errors.Malformed):
        work_split([("app.mail", utc(2021, 2, 1, 13), utc(2021, 2, 1, 11))])


@settings(max_examples=80)
@given(
    st.integers(min_value=0, max_value=13 * 24 * 60),
    st.integers(min_value=0, max_value=36 * 60),
)
def test_work_plus_nonwork_conserves_session_length(start_minutes, length_minutes):
    start = utc(2021, 2, 1) + timedelta(minutes=start_minutes)
    end = start + timedelta(minutes=length_minutes)
    out = work_split([("pkg", start, end)])
    work, nonwork = out["pkg"]
    assert work + nonwork == pytest.approx(length_minutes, abs=1e-9)
    assert work >= 0 and nonwork >= 0


# -- purposes --------------------------------------------------------------

def test_purpose_percentages_sum_to_100_per_package():
    answers = [
        {"app.chat": "communication", "app.news": "leisure"},
        {"app.chat": "communication"},
        {"app.chat": "work"},
    ]
    out = purpose_percentages(answers)
    assert out["app.chat"] == {"communication": 66.67, "work": 33.33}
    assert out["app.news"] == {"leisure": 100.0}


# -- category map ----------------------------------------------------------

def test_category_map_passes_unmapped_packages_through():
    catalog = AppCategoryMap({"app.chat": "communication"})
    assert catalog.category_of("app.chat") == "communication"
    assert catalog.category_of("com.foo") == "com.foo"


def test_category_map_load_and_default(tmp_path):
    path = tmp_path / "cats.csv"
    path.write_text("package,category\napp.chat,communication\n", encoding="utf-8")
    assert AppCategoryMap.load(path).category_of("app.chat") == "communication"

    default = AppCategoryMap.default()
    assert len(default.packages()) >= 15
    assert default.categories()


def test_category_map_load_rejects_bad_header(tmp_path):
    path = tmp_path / "cats.csv"
    path.write_text("pkg,cat\napp.chat,communication\n", encoding="utf-8")
    with pytest.raises(errors.ParseError):
        AppCategoryMap.load(path)


# -- usage aggregation -----------------------------------------------------

def test_aggregate_app_usage_divides_by_full_user_day_grid():
    """u1 uses X ten minutes a day; u2 never does. Mean over two users is
    five minutes per user-day."""
    catalog = AppCategoryMap({})
    days = [D1, D1 + timedelta(days=1)]
    records = [("u1", d, "X", 10.0) for d in days]
    out = aggregate_app_usage(records, catalog, users={"u1", "u2"}, days=days)
    assert out == {"X": 5.0}


def test_aggregate_app_usage_validates_inputs():
    catalog = AppCategoryMap({})
    with pytest.raises(errors.Malformed):
        aggregate_app_usage([], catalog, users=set())
    with pytest.raises(errors.Malformed):
        aggregate_app_usage([], catalog, users={"u1"}, days=[])


def test_aggregate_app_usage_infers_day_span():
    catalog = AppCategoryMap({"X": "games"})
    records = [("u1", D1, "X", 9.0), ("u1", D1 + timedelta(days=2), "X", 9.0)]
    out = aggregate_app_usage(records, catalog, users={"u1"})
    assert out == {"games": 6.0}  # 18 minutes over a 3-day inferred span


# -- contact fusion --------------------------------------------------------

def test_fuse_daily_contacts_sums_proximity_and_transport():
    proximity = [("u1", utc(2021, 2, 1, 10), 2), ("u1", utc(2021, 2, 1, 16), 1)]
    transport = [("u1", utc(2021, 2, 1, 9), "bus", "10-20")]
    out = fuse_daily_contacts(proximity, transport)
    assert out == {("u1", D1): 2 + 1 + 15}


def test_fuse_daily_contacts_unknown_bucket_is_an_error():
    with pytest.raises(errors.Malformed):
        fuse_daily_contacts([], [("u1", utc(2021, 2, 1, 9), "bus", "1")])


def test_bucket_representatives_cover_the_full_grid():
    from hitloop.engagement import TRANSPORT_BUCKETS

    for transport, buckets in TRANSPORT_BUCKETS.items():
        for bucket in buckets:
            assert (transport, bucket) in BUCKET_REPRESENTATIVE
    assert BUCKET_REPRESENTATIVE[("own_car", ">2")] == 3
    assert BUCKET_REPRESENTATIVE[("boat", ">50")] == 55
