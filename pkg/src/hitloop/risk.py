"""Municipality risk table and the incidence/transmissibility risk matrix.

Two unrelated scales live here on purpose and are never interconverted:
the 4-level administrative classification of municipalities (as-of lookup
over a curated CSV feed) and the 3-zone epidemic risk matrix computed from
14-day incidence per 100k and the Rt value.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass
from datetime import date as Date
from datetime import datetime
from enum import Enum
from typing import Any

from .errors import InvalidInput, NotFound, ParseError


class MunicipalRiskLevel(str, Enum):
    MODERATED = "moderated"
    HIGH = "high"
    VERY_HIGH = "very_high"
    EXTREMELY_HIGH = "extremely_high"


@dataclass(frozen=True)
class MunicipalityRecord:
    municipality: str
    level: MunicipalRiskLevel
    effective_date: Date


@dataclass(frozen=True)
class EpiSnapshot:
    date: Date
    incidence: float | None = None
    rt: float | None = None
    active_cases: int | None = None
    new_confirmed: int | None = None
    total_confirmed: int | None = None
    new_deaths: int | None = None


def matrix_zone(incidence: float, rt: float) -> int:
    """3-zone risk matrix: 2 = both thresholds exceeded, 1 = exactly one,
    0 = neither. Thresholds are strict: incidence > 120, rt > 1."""
    for name, v in (("incidence", incidence), ("rt", rt)):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise InvalidInput(f"{name} must be a number, got {v!r}")
        if math.isnan(v) or math.isinf(v) or v < 0:
            raise InvalidInput(f"{name} must be finite and >= 0, got {v!r}")
    if incidence > 120 and rt > 1:
        return 2
    if incidence > 120 or rt > 1:
        return 1
    return 0


class RiskTable:
    """As-of lookup over (municipality, effective_date) records.

    Reload builds a fresh index and swaps it atomically, so readers never
    observe a partially loaded table.
    """

    def __init__(self, records: list[MunicipalityRecord] | None = None):
        self._lock = threading.Lock()
        self._index: dict[str, list[MunicipalityRecord]] = {}
        if records:
            self._index = self._build(records)

    @staticmethod
    def _build(records: list[MunicipalityRecord]) -> dict[str, list[MunicipalityRecord]]:
        index: dict[str, dict[Date, MunicipalityRecord]] = {}
        for rec in records:
            # latest-loaded record wins for a duplicated (municipality, date)
            index.setdefault(rec.municipality, {})[rec.effective_date] = rec
        return {
            muni: [by_date[d] for d in sorted(by_date)]
            for muni, by_date in index.items()
        }

    def load(self, records: list[MunicipalityRecord]) -> None:
        built = self._build(records)
        with self._lock:
            self._index = built

    def municipalities(self) -> list[str]:
        return sorted(self._index)

    def lookup_risk(self, municipality: str, at: Date | datetime) -> MunicipalRiskLevel:
        if isinstance(at, datetime):
            at = at.date()
        recs = self._index.get(municipality)
        if not recs:
            raise NotFound(f"municipality {municipality!r}")
        chosen = None
        for rec in recs:
            if rec.effective_date <= at:
                chosen = rec
            else:
                break
        if chosen is None:
            raise NotFound(f"no {municipality!r} record effective on or before {at}")
        return chosen.level


def load_municipal_risk(path: str) -> RiskTable:
    """Parse the ``municipality,level,effective_date`` CSV into a RiskTable."""
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (lineno == 1 and row[0].strip().lower() == "municipality"):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 columns, got {len(row)}", line=lineno)
            muni, level_text, date_text = (c.strip() for c in row)
            try:
                level = MunicipalRiskLevel(level_text)
            except ValueError:
                raise ParseError(f"unknown risk level {level_text!r}", line=lineno) from None
            try:
                eff = Date.fromisoformat(date_text)
            except ValueError:
                raise ParseError(f"bad date {date_text!r}", line=lineno) from None
            if not muni:
                raise ParseError("empty municipality name", line=lineno)
            records.append(MunicipalityRecord(muni, level, eff))
    return RiskTable(records)


def load_covid_dataset(path: str, column_map: dict[str, str] | None = None) -> dict[Date, EpiSnapshot]:
    """Load the daily epidemic dataset CSV into date-keyed snapshots.

    ``column_map`` maps snapshot field names to CSV header names; defaults
    to identity. Missing or empty cells leave the field absent (None).
    """
    fields = ("incidence", "rt", "active_cases", "new_confirmed", "total_confirmed", "new_deaths")
    colmap = {f: f for f in fields}
    colmap["date"] = "date"
    if column_map:
        colmap.update(column_map)
    out: dict[Date, EpiSnapshot] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError("empty csv", line=1)
        if colmap["date"] not in reader.fieldnames:
            raise ParseError(f"missing date column {colmap['date']!r}", line=1)
        for lineno, row in enumerate(reader, start=2):
            raw_date = (row.get(colmap["date"]) or "").strip()
            try:
                day = Date.fromisoformat(raw_date)
            except ValueError:
                raise ParseError(f"bad date {raw_date!r}", line=lineno) from None
            if day in out:
                raise ParseError(f"duplicate date {day}", line=lineno)
            kwargs: dict[str, Any] = {}
            for fname in fields:
                cell = (row.get(colmap[fname]) or "").strip() if colmap[fname] in row else ""
                if not cell:
                    continue
                try:
                    kwargs[fname] = int(cell) if fname.endswith(("cases", "confirmed", "deaths")) else float(cell)
                except ValueError:
                    raise ParseError(f"bad numeric cell {cell!r} for {fname}", line=lineno) from None
            out[day] = EpiSnapshot(date=day, **kwargs)
    return out
