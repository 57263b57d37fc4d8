"""Device ingestion gateway: authenticates devices and translates the
measurement wire format into broker attribute updates.

Auth is static per-device API keys. Keys are never stored in clear: the
registry keeps a salted SHA-256 digest, so a leaked registry file does not
leak credentials. Unknown aliases and per-item rejections (stale or
future-dated measurements) are skipped and reported back to the device
instead of failing the whole batch.
"""

from __future__ import annotations

import hashlib
import json
import secrets
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Any, Callable

from .broker import AttributeValue, ContextBroker, ContextEntity
from .errors import DuplicateDevice, Malformed, StaleUpdate, Unauthorized

CLOCK_SKEW = timedelta(minutes=5)


def _digest(api_key: str, salt: str) -> str:
    return hashlib.sha256((salt + ":" + api_key).encode("utf-8")).hexdigest()


@dataclass
class DeviceRegistration:
    device_id: str
    api_key: str
    target_entity_id: str
    entity_type: str = "Participant"
    attribute_aliases: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Measurement:
    alias: str
    value: Any
    observed_at: datetime


@dataclass
class IngestResult:
    accepted: int
    skipped: list[dict[str, str]]

    @property
    def accepted_count(self) -> int:
        return self.accepted


@dataclass
class _StoredRegistration:
    device_id: str
    salt: str
    key_digest: str
    target_entity_id: str
    entity_type: str
    attribute_aliases: dict[str, str]

    def public(self) -> DeviceRegistration:
        return DeviceRegistration(
            device_id=self.device_id,
            api_key="",
            target_entity_id=self.target_entity_id,
            entity_type=self.entity_type,
            attribute_aliases=dict(self.attribute_aliases),
        )


class IngestGateway:
    def __init__(self, broker: ContextBroker, clock: Callable[[], datetime] | None = None):
        self._broker = broker
        self._clock = clock
        self._registry: dict[str, _StoredRegistration] = {}

    # -- registration -----------------------------------------------------

    def register_device(self, reg: DeviceRegistration) -> None:
        if not reg.device_id:
            raise Malformed("device_id must be non-empty")
        if not reg.target_entity_id:
            raise Malformed("target entity id must be non-empty")
        if not reg.api_key:
            raise Malformed("api_key must be non-empty")
        aliases = dict(reg.attribute_aliases)
        if len(set(aliases.values())) != len(aliases):
            raise Malformed("attribute aliases must be injective")
        existing = self._registry.get(reg.device_id)
        if existing is not None and existing.key_digest == _digest(reg.api_key, existing.salt):
            raise DuplicateDevice(f"device {reg.device_id} already registered with this key")
        if existing is not None:
            raise DuplicateDevice(f"device {reg.device_id} already registered")
        salt = secrets.token_hex(8)
        self._registry[reg.device_id] = _StoredRegistration(
            device_id=reg.device_id,
            salt=salt,
            key_digest=_digest(reg.api_key, salt),
            target_entity_id=reg.target_entity_id,
            entity_type=reg.entity_type,
            attribute_aliases=aliases,
        )

    def authenticate(self, api_key: str, device_id: str) -> DeviceRegistration:
        stored = self._registry.get(device_id)
        if stored is None or stored.key_digest != _digest(api_key, stored.salt):
            raise Unauthorized(f"unknown device or bad key for {device_id!r}")
        return stored.public()

    # -- ingestion --------------------------------------------------------

    def ingest(self, api_key: str, device_id: str, batch: list[Measurement]) -> IngestResult:
        """Apply one batch of measurements to the device's target entity.

        Each measurement becomes one attribute update, applied individually
        so per-item failures (unknown alias, stale, future-dated) never take
        down sibling measurements.
        """
        stored = self._registry.get(device_id)
        if stored is None or stored.key_digest != _digest(api_key, stored.salt):
            raise Unauthorized(f"unknown device or bad key for {device_id!r}")
        if not batch:
            raise Malformed("batch must carry at least one measurement")
        now = self._clock() if self._clock else None
        accepted = 0
        skipped: list[dict[str, str]] = []
        for m in batch:
            attr = stored.attribute_aliases.get(m.alias)
            if attr is None:
                skipped.append({"alias": m.alias, "reason": "unknown_alias"})
                continue
            if now is not None and m.observed_at > now + CLOCK_SKEW:
                skipped.append({"alias": m.alias, "reason": "future_timestamp"})
                continue
            update = ContextEntity(
                id=stored.target_entity_id,
                entity_type=stored.entity_type,
                attributes={attr: AttributeValue(value=m.value, observed_at=m.observed_at)},
            )
            try:
                self._broker.upsert_entity(update)
            except StaleUpdate:
                skipped.append({"alias": m.alias, "reason": "stale"})
                continue
            accepted += 1
        return IngestResult(accepted=accepted, skipped=skipped)

    # -- registry file ----------------------------------------------------

    def dump_registry(self, path: str) -> None:
        docs = [
            {
                "device_id": r.device_id,
                "salt": r.salt,
                "key_digest": r.key_digest,
                "target_entity_id": r.target_entity_id,
                "entity_type": r.entity_type,
                "attribute_aliases": r.attribute_aliases,
            }
            for r in self._registry.values()
        ]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(docs, fh, indent=2, sort_keys=True)

    def load_registry(self, path: str) -> int:
        with open(path, "r", encoding="utf-8") as fh:
            docs = json.load(fh)
        for doc in docs:
            self._registry[doc["device_id"]] = _StoredRegistration(
                device_id=doc["device_id"],
                salt=doc["salt"],
                key_digest=doc["key_digest"],
                target_entity_id=doc["target_entity_id"],
                entity_type=doc.get("entity_type", "Participant"),
                attribute_aliases=dict(doc["attribute_aliases"]),
            )
        return len(docs)
