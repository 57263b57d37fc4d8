"""Entity/attribute context store with filtered change subscriptions.

State lives in typed entities whose attributes carry a value, an observation
timestamp and free-form metadata. Consumers subscribe by entity type and
attribute set; each accepted update fans out at most one notification per
matching subscription, subject to per-subscription throttling.

Updates that would move an attribute's observation time backwards are
rejected outright, which keeps every downstream time series monotone.
Delivery is at-least-once: three attempts, then the notification lands in a
dead-letter list instead of being dropped silently.
"""

from __future__ import annotations

import copy
import json
import logging
import queue
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Any, Callable

from .errors import Malformed, NotFound, StaleUpdate
from .events import iso, parse_iso

logger = logging.getLogger(__name__)

WILDCARD = "*"

COMPARATORS: dict[str, Callable[[Any, Any], bool]] = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
}


@dataclass
class AttributeValue:
    value: Any
    observed_at: datetime
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {"value": self.value, "observed_at": iso(self.observed_at), "metadata": dict(self.metadata)}

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "AttributeValue":
        return cls(value=doc["value"], observed_at=parse_iso(doc["observed_at"]), metadata=dict(doc.get("metadata", {})))


@dataclass
class ContextEntity:
    id: str
    entity_type: str
    attributes: dict[str, AttributeValue] = field(default_factory=dict)

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "type": self.entity_type,
            "attributes": {name: av.to_doc() for name, av in sorted(self.attributes.items())},
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "ContextEntity":
        return cls(
            id=doc["id"],
            entity_type=doc["type"],
            attributes={name: AttributeValue.from_doc(av) for name, av in doc.get("attributes", {}).items()},
        )


# A sink is either a callable taking a Notification or an opaque endpoint
# reference (URL string) the owner resolves through `transport`.
Sink = Callable[["Notification"], None] | str


@dataclass
class Subscription:
    entity_type_filter: str
    watched_attributes: frozenset[str]
    sink: Sink
    throttling: timedelta = timedelta(0)
    sub_id: str = ""

    def matches_type(self, entity_type: str) -> bool:
        return self.entity_type_filter == WILDCARD or self.entity_type_filter == entity_type

    def watched_subset(self, changed: dict[str, AttributeValue]) -> dict[str, AttributeValue]:
        if not self.watched_attributes:
            return dict(changed)
        return {k: v for k, v in changed.items() if k in self.watched_attributes}


@dataclass
class Notification:
    sub_id: str
    entity_id: str
    entity_type: str
    attributes: dict[str, AttributeValue]
    emitted_at: datetime

    def to_doc(self) -> dict[str, Any]:
        return {
            "subscriptionId": self.sub_id,
            "data": [
                {
                    "id": self.entity_id,
                    "type": self.entity_type,
                    "attributes": {k: v.to_doc() for k, v in sorted(self.attributes.items())},
                }
            ],
            "emitted_at": iso(self.emitted_at),
        }


class ContextBroker:
    """In-memory context store; optionally write-ahead logged for restart.

    delivery="sync" runs sinks inline with the upsert call (deterministic,
    what the simulator uses); delivery="async" dispatches from a single
    worker thread, which preserves per-subscription ordering.
    """

    def __init__(
        self,
        wal_path: str | None = None,
        delivery: str = "sync",
        transport: Callable[[str, dict], None] | None = None,
        clock: Callable[[], datetime] | None = None,
        retry_limit: int = 3,
    ):
        if delivery not in ("sync", "async"):
            raise ValueError(f"unknown delivery mode {delivery!r}")
        self._entities: dict[str, ContextEntity] = {}
        self._versions: dict[str, int] = {}
        self._subs: dict[str, Subscription] = {}
        self._last_emit: dict[str, datetime] = {}
        self._lock = threading.RLock()
        self._clock = clock
        self._transport = transport
        self._retry_limit = retry_limit
        self.dead_letters: list[Notification] = []
        self._delivery = delivery
        self._queue: queue.Queue | None = None
        self._worker: threading.Thread | None = None
        if delivery == "async":
            self._queue = queue.Queue()
            self._worker = threading.Thread(target=self._drain, daemon=True)
            self._worker.start()
        self._wal_path = wal_path
        self._wal_fh = None
        if wal_path:
            self._replay_wal(wal_path)
            self._wal_fh = open(wal_path, "a", encoding="utf-8")

    # -- entity operations ------------------------------------------------

    def upsert_entity(self, entity: ContextEntity) -> int:
        if not entity.id or not entity.entity_type:
            raise Malformed("entity id and type must be non-empty")
        if not entity.attributes:
            raise Malformed("upsert carries no attributes")
        with self._lock:
            stored = self._entities.get(entity.id)
            if stored is not None and stored.entity_type != entity.entity_type:
                raise Malformed(
                    f"entity {entity.id} is of type {stored.entity_type}, got {entity.entity_type}"
                )
            if stored is not None:
                for name, av in entity.attributes.items():
                    old = stored.attributes.get(name)
                    if old is not None and av.observed_at < old.observed_at:
                        raise StaleUpdate(
                            f"{entity.id}.{name}: {iso(av.observed_at)} precedes stored {iso(old.observed_at)}"
                        )
            changed = {name: copy.deepcopy(av) for name, av in entity.attributes.items()}
            if stored is None:
                self._entities[entity.id] = ContextEntity(entity.id, entity.entity_type, dict(changed))
            else:
                stored.attributes.update(changed)
            version = self._versions.get(entity.id, 0) + 1
            self._versions[entity.id] = version
            if self._wal_fh is not None:
                rec = {"id": entity.id, "type": entity.entity_type,
                       "attrs": {k: v.to_doc() for k, v in changed.items()}}
                self._wal_fh.write(json.dumps(rec, sort_keys=True) + "\n")
                self._wal_fh.flush()
            jobs = self._plan_notifications(entity.id, entity.entity_type, changed)
        for sub, notification in jobs:
            if self._delivery == "sync":
                self._deliver(sub, notification)
            else:
                self._queue.put((sub, notification))
        return version

    def get_entity(self, entity_id: str) -> ContextEntity:
        with self._lock:
            stored = self._entities.get(entity_id)
            if stored is None:
                raise NotFound(f"entity {entity_id!r}")
            return copy.deepcopy(stored)

    def entity_version(self, entity_id: str) -> int:
        with self._lock:
            if entity_id not in self._versions:
                raise NotFound(f"entity {entity_id!r}")
            return self._versions[entity_id]

    def query_entities(
        self,
        type_filter: str = WILDCARD,
        predicates: tuple[tuple[str, str, Any], ...] | list = (),
    ) -> list[ContextEntity]:
        for _, op, _ in predicates:
            if op not in COMPARATORS:
                raise Malformed(f"unknown comparator {op!r}")
        with self._lock:
            out = []
            for entity_id in sorted(self._entities):
                ent = self._entities[entity_id]
                if type_filter != WILDCARD and ent.entity_type != type_filter:
                    continue
                if all(self._holds(ent, p) for p in predicates):
                    out.append(copy.deepcopy(ent))
            return out

    @staticmethod
    def _holds(ent: ContextEntity, pred: tuple[str, str, Any]) -> bool:
        attr, op, ref = pred
        av = ent.attributes.get(attr)
        if av is None:
            return False
        try:
            return COMPARATORS[op](av.value, ref)
        except TypeError:
            return False

    # -- subscriptions ----------------------------------------------------

    def create_subscription(self, sub: Subscription) -> str:
        if sub.throttling < timedelta(0):
            raise Malformed("throttling must be >= 0")
        if sub.sink is None or (isinstance(sub.sink, str) and not sub.sink):
            raise Malformed("subscription sink missing")
        if not sub.entity_type_filter:
            raise Malformed("entity type filter must be non-empty (use '*' for any)")
        with self._lock:
            sub_id = sub.sub_id or uuid.uuid4().hex[:12]
            if sub_id in self._subs:
                raise Malformed(f"subscription id {sub_id} already exists")
            sub.sub_id = sub_id
            self._subs[sub_id] = sub
            return sub_id

    def subscriptions(self) -> list[Subscription]:
        with self._lock:
            return list(self._subs.values())

    def _plan_notifications(
        self, entity_id: str, entity_type: str, changed: dict[str, AttributeValue]
    ) -> list[tuple[Subscription, Notification]]:
        newest = max(av.observed_at for av in changed.values())
        now = self._clock() if self._clock else newest
        emitted_at = max(now, newest)
        jobs = []
        for sub in self._subs.values():
            if not sub.matches_type(entity_type):
                continue
            subset = sub.watched_subset(changed)
            if not subset:
                continue
            last = self._last_emit.get(sub.sub_id)
            if last is not None and sub.throttling > timedelta(0):
                if emitted_at - last < sub.throttling:
                    continue
            self._last_emit[sub.sub_id] = emitted_at
            jobs.append(
                (sub, Notification(sub.sub_id, entity_id, entity_type, copy.deepcopy(subset), emitted_at))
            )
        return jobs

    def _deliver(self, sub: Subscription, notification: Notification) -> None:
        for attempt in range(1, self._retry_limit + 1):
            try:
                if callable(sub.sink):
                    sub.sink(notification)
                elif self._transport is not None:
                    self._transport(sub.sink, notification.to_doc())
                else:
                    raise RuntimeError(f"no transport configured for sink {sub.sink!r}")
                return
            except Exception:
                logger.warning("delivery attempt %d/%d failed for sub %s",
                               attempt, self._retry_limit, sub.sub_id, exc_info=True)
        self.dead_letters.append(notification)

    def _drain(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            sub, notification = item
            self._deliver(sub, notification)
            self._queue.task_done()

    def flush(self) -> None:
        """Block until the async dispatch queue is empty (no-op when sync)."""
        if self._queue is not None:
            self._queue.join()

    def close(self) -> None:
        if self._queue is not None and self._worker is not None:
            self._queue.join()
            self._queue.put(None)
            self._worker.join(timeout=5)
            self._worker = None
        if self._wal_fh is not None:
            self._wal_fh.close()
            self._wal_fh = None

    # -- persistence ------------------------------------------------------

    def _replay_wal(self, path: str) -> None:
        try:
            fh = open(path, "r", encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                attrs = {k: AttributeValue.from_doc(v) for k, v in rec["attrs"].items()}
                ent = self._entities.get(rec["id"])
                if ent is None:
                    self._entities[rec["id"]] = ContextEntity(rec["id"], rec["type"], attrs)
                else:
                    ent.attributes.update(attrs)
                self._versions[rec["id"]] = self._versions.get(rec["id"], 0) + 1
