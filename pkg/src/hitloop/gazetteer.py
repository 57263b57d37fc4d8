"""Offline reverse-geocoding stub.

A grid file maps 0.05-degree lat/lon cells to (district, municipality,
parish). This stands in for a live reverse-geocoding API behind the same
interface, so a networked client can be dropped in without touching the
sensing layer. A cell miss behaves like a dead connection: the caller must
discard the fix.
"""

from __future__ import annotations

import csv
import math
from typing import Protocol

from .errors import Offline, ParseError
from .sensing import GAZETTEER_RESOLUTION_DEG


class Gazetteer(Protocol):
    def resolve(self, lat: float, lon: float) -> tuple[str, str, str]: ...


def cell_index(coord: float, resolution: float = GAZETTEER_RESOLUTION_DEG) -> int:
    return math.floor(coord / resolution + 1e-9)


class GridGazetteer:
    """CSV-backed grid: ``cell_lat,cell_lon,district,municipality,parish``
    where cell_lat/cell_lon are the cell's lower-left corner."""

    def __init__(self, cells: dict[tuple[int, int], tuple[str, str, str]],
                 resolution: float = GAZETTEER_RESOLUTION_DEG):
        self._cells = cells
        self._resolution = resolution

    @classmethod
    def from_csv(cls, path: str, resolution: float = GAZETTEER_RESOLUTION_DEG) -> "GridGazetteer":
        cells: dict[tuple[int, int], tuple[str, str, str]] = {}
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            for lineno, row in enumerate(reader, start=1):
                if not row or (lineno == 1 and row[0].strip().lower() == "cell_lat"):
                    continue
                if len(row) != 5:
                    raise ParseError(f"expected 5 columns, got {len(row)}", line=lineno)
                try:
                    lat, lon = float(row[0]), float(row[1])
                except ValueError:
                    raise ParseError(f"bad cell coordinate {row[:2]!r}", line=lineno) from None
                key = (cell_index(lat, resolution), cell_index(lon, resolution))
                cells[key] = (row[2].strip(), row[3].strip(), row[4].strip())
        return cls(cells, resolution)

    def resolve(self, lat: float, lon: float) -> tuple[str, str, str]:
        key = (cell_index(lat, self._resolution), cell_index(lon, self._resolution))
        hit = self._cells.get(key)
        if hit is None:
            raise Offline(f"no gazetteer cell for ({lat:.4f}, {lon:.4f})")
        return hit


class OfflineGazetteer:
    """Always-unreachable gazetteer, for exercising the discard path."""

    def resolve(self, lat: float, lon: float) -> tuple[str, str, str]:
        raise Offline("gazetteer unreachable")
