"""Client-side sensing logic: discrete location, geo anonymization,
proximity counting, activity and sleep stream smoothing, WiFi sanitization
and noise averaging.

Everything here is a pure function over scan results and configuration.
The privacy-sensitive pieces (home SSID, raw coordinates, place names) stay
inside this layer: only the two-value location label, keyed geo tokens and
the municipal risk level may leave it.
"""

from __future__ import annotations

import hashlib
import hmac
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Iterable

from .errors import EmptyWindow, Malformed, NotConfigured, Offline, Unordered
from .risk import MunicipalRiskLevel

HOME = "home"
OTHER = "other"

ACTIVITY_LABELS = frozenset(
    {"running", "walking", "on_bicycle", "in_vehicle", "on_foot", "tilting", "still"}
)
DEVICE_CLASSES = frozenset({"headphones", "smartphone", "wearable", "tv", "car", "other"})
PERSON_DEVICE_CLASSES = frozenset({"headphones", "smartphone", "wearable"})

DEFAULT_CONFIDENCE_THRESHOLD = 50
IN_VEHICLE_MIN_DURATION = timedelta(seconds=120)
GAZETTEER_RESOLUTION_DEG = 0.05


@dataclass(frozen=True)
class HomeNetworkConfig:
    """Device-local only. Neither field may appear in any persisted record
    or outbound message."""
    home_ssid: str
    user_key: bytes

    def __post_init__(self):
        if len(self.user_key) != 32:
            raise Malformed("user_key must be exactly 32 bytes")


@dataclass(frozen=True)
class WifiAccessPoint:
    ssid: str
    bssid: str
    rssi: float

    def __post_init__(self):
        if not -100 <= self.rssi <= 0:
            raise Malformed(f"rssi {self.rssi} outside [-100, 0]")


@dataclass(frozen=True)
class BluetoothSighting:
    device_class: str
    rssi: float
    connected: bool

    def __post_init__(self):
        if self.device_class not in DEVICE_CLASSES:
            raise Malformed(f"unknown device class {self.device_class!r}")


@dataclass(frozen=True)
class ActivityClassification:
    label: str
    confidence: float
    observed_at: datetime

    def __post_init__(self):
        if self.label not in ACTIVITY_LABELS:
            raise Malformed(f"unknown activity label {self.label!r}")
        if not 0 <= self.confidence <= 100:
            raise Malformed("confidence outside [0, 100]")


@dataclass(frozen=True)
class SleepClassification:
    sleeping: bool
    confidence: float
    observed_at: datetime


@dataclass(frozen=True)
class GeoContextTokens:
    district_token: str
    municipality_token: str
    parish_token: str
    risk_level: MunicipalRiskLevel | None = None


@dataclass(frozen=True)
class ActivitySegment:
    label: str
    start: datetime
    end: datetime | None  # None = still open at end of stream

    @property
    def duration(self) -> timedelta | None:
        return None if self.end is None else self.end - self.start


@dataclass(frozen=True)
class AppUsageRecord:
    package: str
    foreground_minutes: float
    day_start: datetime
    day_end: datetime

    def __post_init__(self):
        if self.foreground_minutes < 0:
            raise Malformed("foreground_minutes must be >= 0")
        if self.foreground_minutes > (self.day_end - self.day_start).total_seconds() / 60.0:
            raise Malformed("foreground_minutes exceeds window length")


@dataclass(frozen=True)
class WatchSample:
    kind: str
    value: float | str
    observed_at: datetime

    def __post_init__(self):
        if self.kind not in ("steps", "heart_rate", "activity"):
            raise Malformed(f"unknown watch sample kind {self.kind!r}")
        if self.kind == "heart_rate" and not 25 <= float(self.value) <= 250:
            raise Malformed(f"heart rate {self.value} outside [25, 250] bpm")


# -- discrete location ----------------------------------------------------

def infer_discrete_location(scan: Iterable[WifiAccessPoint], cfg: HomeNetworkConfig | None) -> str:
    """Two-value location: 'home' iff the configured SSID is in the scan
    (exact, case-sensitive). Absence of the home network, including an
    empty scan, means 'other'."""
    if cfg is None or not cfg.home_ssid:
        raise NotConfigured("home network not configured")
    for ap in scan:
        if ap.ssid == cfg.home_ssid:
            return HOME
    return OTHER


# -- geo anonymization ----------------------------------------------------

def _geo_token(user_key: bytes, level_tag: str, name: str) -> str:
    mac = hmac.new(user_key, (level_tag + "\x1f" + name).encode("utf-8"), hashlib.sha256)
    return mac.hexdigest()[:16]


def anonymize_geo(user_key: bytes, district: str, municipality: str, parish: str,
                  risk_level: MunicipalRiskLevel | None = None) -> GeoContextTokens:
    """Keyed one-way tokens for the three place names, 64 bits each.

    Deterministic per (user_key, name); different users tokenize the same
    place to different values, so stored movements are comparable within a
    user but never across users.
    """
    for label, name in (("district", district), ("municipality", municipality), ("parish", parish)):
        if not name:
            raise Malformed(f"{label} name must be non-empty")
    return GeoContextTokens(
        district_token=_geo_token(user_key, "district", district),
        municipality_token=_geo_token(user_key, "municipality", municipality),
        parish_token=_geo_token(user_key, "parish", parish),
        risk_level=risk_level,
    )


def resolve_geo_context(
    lat: float,
    lon: float,
    gazetteer: "Gazetteer",
    risk_client: Callable[[str], MunicipalRiskLevel],
    cfg: HomeNetworkConfig,
) -> GeoContextTokens:
    """Resolve a fix to anonymized geo context.

    Order matters: the municipal risk is looked up against the raw
    municipality name first, then the names are tokenized and the raw fix
    is discarded. Any lookup failure discards the whole fix (Offline);
    nothing partial is ever stored.
    """
    if not (math.isfinite(lat) and math.isfinite(lon)):
        raise Malformed("coordinates must be finite")
    district, municipality, parish = gazetteer.resolve(lat, lon)
    try:
        level = risk_client(municipality)
    except Offline:
        raise
    except Exception as exc:
        raise Offline(f"risk lookup failed: {exc}") from exc
    return anonymize_geo(cfg.user_key, district, municipality, parish, risk_level=level)


# -- proximity ------------------------------------------------------------

def count_person_devices(scan: Iterable[BluetoothSighting], rssi_min: float | None = None) -> int:
    """Unconnected headphones / smartphones / wearables in the scan.

    rssi_min enables an optional nearness cutoff (e.g. -75 dBm). It is off
    by default and has not been validated against real distances.
    """
    count = 0
    for s in scan:
        if s.connected or s.device_class not in PERSON_DEVICE_CLASSES:
            continue
        if rssi_min is not None and s.rssi < rssi_min:
            continue
        count += 1
    return count


# -- activity streams -----------------------------------------------------

def smooth_activity(
    stream: list[ActivityClassification],
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
    end: datetime | None = None,
) -> list[ActivitySegment]:
    """Drop low-confidence classifications and merge runs of equal labels.

    Each segment spans [first.observed_at, next-different.observed_at). The
    trailing segment stays open unless ``end`` closes the stream.
    """
    for a, b in zip(stream, stream[1:]):
        if b.observed_at < a.observed_at:
            raise Unordered(f"stream goes backwards at {b.observed_at}")
    kept = [c for c in stream if c.confidence >= threshold]
    if not kept:
        return []
    segments = []
    seg_label = kept[0].label
    seg_start = kept[0].observed_at
    for c in kept[1:]:
        if c.label != seg_label:
            segments.append(ActivitySegment(seg_label, seg_start, c.observed_at))
            seg_label = c.label
            seg_start = c.observed_at
    segments.append(ActivitySegment(seg_label, seg_start, end))
    return segments


def detect_in_vehicle_episodes(
    segments: Iterable[ActivitySegment],
    min_duration: timedelta = IN_VEHICLE_MIN_DURATION,
) -> list[ActivitySegment]:
    """Closed in_vehicle segments strictly longer than ``min_duration``."""
    return [
        s
        for s in segments
        if s.label == "in_vehicle" and s.end is not None and s.duration > min_duration
    ]


# -- wifi / noise ---------------------------------------------------------

def sanitize_wifi(scan: Iterable[WifiAccessPoint]) -> list[tuple[str, float]]:
    """Strip SSIDs; keep (bssid, rssi) in scan order."""
    return [(ap.bssid, ap.rssi) for ap in scan]


def mean_noise(window: list[float]) -> float:
    """Arithmetic mean of amplitude samples; raw audio never exists here."""
    if not window:
        raise EmptyWindow("noise window is empty")
    return sum(window) / len(window)
