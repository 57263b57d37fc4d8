"""Lagged cross-correlation between daily behavior series and the daily
epidemic context.

A behavior value at day d is paired with the context value at day d - lag,
so positive lags ask "does the situation some days ago explain behavior
today". Pairs are formed by date intersection (pairwise deletion); a cell
needs at least three pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from pathlib import Path
from typing import Collection, Mapping

import numpy as np

from ..errors import InsufficientOverlap, Malformed

MIN_PAIRS = 3


def lagged_pearson(
    behavior: Mapping[Date, float],
    context: Mapping[Date, float],
    lag: int,
) -> tuple[float, int]:
    """Pearson r between behavior(d) and context(d - lag) over shared dates.

    Returns (r, n). Raises InsufficientOverlap below three pairs; returns
    nan when either side has zero variance over the pairing.
    """
    if lag < 0:
        raise Malformed(f"lag must be >= 0, got {lag}")
    shift = timedelta(days=lag)
    xs, ys = [], []
    for day, value in behavior.items():
        other = context.get(day - shift)
        if other is None:
            continue
        xs.append(float(value))
        ys.append(float(other))
    n = len(xs)
    if n < MIN_PAIRS:
        raise InsufficientOverlap(f"only {n} overlapping pairs at lag {lag}")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        return float("nan"), n
    r = float(np.corrcoef(x, y)[0, 1])
    return r, n


@dataclass
class CorrelationMatrix:
    names: list[str]
    lag: int
    r: list[list[float | None]] = field(default_factory=list)
    n: list[list[int]] = field(default_factory=list)

    def cell(self, a: str, b: str) -> tuple[float | None, int]:
        i, j = self.names.index(a), self.names.index(b)
        return self.r[i][j], self.n[i][j]

    def to_doc(self) -> dict:
        return {"lag": self.lag, "names": list(self.names), "r": self.r, "n": self.n}

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["feature", *self.names])
            for name, row in zip(self.names, self.r):
                writer.writerow([name, *("" if v is None else f"{v:.6f}" for v in row)])


def build_matrix(
    features: Mapping[str, Mapping[Date, float]],
    lag: int,
    context_side: Collection[str],
    unlagged: Collection[str] = (),
) -> CorrelationMatrix:
    """Full correlation matrix over the given daily series.

    The lag applies only to mixed pairs (one behavior series, one context
    series); pairs within a side compare same-date values, as do pairs
    involving a series listed in ``unlagged`` (calendar features like the
    weekday have no meaningful lag). The matrix is symmetric and its
    diagonal is exactly 1.
    """
    names = list(features)
    context = set(context_side)
    skip_lag = set(unlagged)
    size = len(names)
    r_out: list[list[float | None]] = [[None] * size for _ in range(size)]
    n_out: list[list[int]] = [[0] * size for _ in range(size)]
    for i, a in enumerate(names):
        r_out[i][i] = 1.0
        n_out[i][i] = len(features[a])
        for j in range(i + 1, size):
            b = names[j]
            mixed = (a in context) != (b in context)
            use_lag = lag if mixed and a not in skip_lag and b not in skip_lag else 0
            if a in context and b not in context:
                behavior, ctx = features[b], features[a]
            else:
                behavior, ctx = features[a], features[b]
            try:
                r, n = lagged_pearson(behavior, ctx, use_lag)
            except InsufficientOverlap:
                r, n = None, 0
            if r is not None and np.isnan(r):
                r = None
            r_out[i][j] = r_out[j][i] = r
            n_out[i][j] = n_out[j][i] = n
    return CorrelationMatrix(names=names, lag=lag, r=r_out, n=n_out)
