"""Offline analysis of a study run: daily series, usage aggregation,
purpose shares, and lagged correlation matrices."""

from .correlate import CorrelationMatrix, build_matrix, lagged_pearson
from .series import (
    AppCategoryMap,
    aggregate_app_usage,
    daily_mean_by_user,
    fuse_daily_contacts,
    purpose_percentages,
    split_periods,
    work_split,
)
from .timeline import EventTable, positiveness_index

__all__ = [
    "AppCategoryMap",
    "CorrelationMatrix",
    "EventTable",
    "aggregate_app_usage",
    "build_matrix",
    "daily_mean_by_user",
    "fuse_daily_contacts",
    "lagged_pearson",
    "positiveness_index",
    "purpose_percentages",
    "split_periods",
    "work_split",
]
