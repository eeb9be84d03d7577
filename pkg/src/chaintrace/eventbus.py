"""Durable publish/subscribe for domain events (in-process message queue).

One append-only log per topic; consumer groups track a committed offset per
topic in a sidecar file. Delivery is at-least-once: the offset advances only
after the handler returns, so a crashed consumer (or a whole bus restart)
replays exactly the unacknowledged suffix. Consumers are expected to dedupe
on event_id; the contracts do this on chain.

Per (topic, key, group) delivery order equals publish order because each
group consumes its topic log sequentially.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional
from urllib.parse import quote

from chaintrace import kernel
from chaintrace.errors import ChainTraceError
from chaintrace.kernel import wire

import struct

_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")


@dataclass(frozen=True)
class DomainEvent:
    topic: str
    key: str
    seq: int
    payload: dict[str, str]
    source_chain: int
    source_tx: bytes

    def canonical(self) -> bytes:
        return kernel.event_canonical(
            self.topic, self.key, self.source_chain, self.source_tx,
            [(k, v.encode("utf-8")) for k, v in self.payload.items()])

    @property
    def event_id(self) -> bytes:
        return kernel.sha256(self.canonical())


class InjectedConsumerCrash(Exception):
    """Raised by the crash-injection hook instead of running the handler."""


@dataclass
class CrashPolicy:
    """Fail every Nth delivery attempt, per subscription."""

    every_n: int

    def should_crash(self, attempt: int) -> bool:
        return self.every_n > 0 and attempt % self.every_n == 0


class _Subscription:
    def __init__(self, topic: str, group: str, handler: Callable, offset: int):
        self.topic = topic
        self.group = group
        self.handler = handler
        self.offset = offset
        self.attempts = 0
        self.failures = 0


class EventBus:
    def __init__(self, data_dir: Optional[Path] = None,
                 crash_policy: Optional[CrashPolicy] = None):
        self.data_dir = Path(data_dir) / "bus" if data_dir is not None else None
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        self.crash_policy = crash_policy
        self._topics: dict[str, list[DomainEvent]] = {}
        self._files: dict[str, object] = {}
        self._subs: dict[tuple[str, str], _Subscription] = {}
        self._lock = threading.RLock()
        self._closed = False
        self._thread: Optional[threading.Thread] = None
        self._stop = threading.Event()
        # successful deliveries per group, for order assertions in tests
        self.delivery_log: list[tuple[str, str, str, int]] = []
        self.skipped: int = 0
        if self.data_dir is not None:
            self._reload()

    # -- persistence -----------------------------------------------------------
    def _topic_path(self, topic: str) -> Path:
        return self.data_dir / (quote(topic, safe=".") + ".log")

    def _offset_path(self, topic: str, group: str) -> Path:
        return self.data_dir / (quote(topic, safe=".") + "@" +
                                quote(group, safe=".") + ".offset")

    def _reload(self) -> None:
        for path in sorted(self.data_dir.glob("*.log")):
            data = path.read_bytes()
            events: list[DomainEvent] = []
            pos = 0
            while pos < len(data):
                (n,) = _U32.unpack_from(data, pos)
                pos += 4
                payload = data[pos : pos + n]
                pos += n
                seq, ew = wire.decode_event(payload)
                events.append(DomainEvent(
                    topic=ew.topic, key=ew.key, seq=seq,
                    payload={k: v.decode("utf-8") for k, v in ew.payload},
                    source_chain=ew.source_chain, source_tx=ew.source_tx))
            if events:
                self._topics[events[0].topic] = events

    def _persist(self, event: DomainEvent) -> None:
        if self.data_dir is None:
            return
        fh = self._files.get(event.topic)
        if fh is None:
            fh = open(self._topic_path(event.topic), "ab")
            self._files[event.topic] = fh
        record = _U64.pack(event.seq) + event.canonical()
        fh.write(_U32.pack(len(record)))
        fh.write(record)
        fh.flush()

    def _load_offset(self, topic: str, group: str) -> int:
        if self.data_dir is None:
            return 0
        path = self._offset_path(topic, group)
        if not path.exists():
            return 0
        return int(path.read_text().strip() or 0)

    def _store_offset(self, topic: str, group: str, offset: int) -> None:
        if self.data_dir is None:
            return
        self._offset_path(topic, group).write_text(str(offset))

    # -- producer side -----------------------------------------------------------
    def publish(self, topic: str, key: str, payload: dict[str, str],
                source_chain: int, source_tx: bytes) -> DomainEvent:
        if not isinstance(topic, str) or not topic:
            raise ChainTraceError("MalformedEvent", "topic must be nonempty")
        if not isinstance(key, str):
            raise ChainTraceError("MalformedEvent", "key must be a string")
        if (not isinstance(payload, dict)
                or not all(isinstance(k, str) and isinstance(v, str)
                           for k, v in payload.items())):
            raise ChainTraceError("MalformedEvent",
                                  "payload must map strings to strings")
        if not isinstance(source_tx, bytes) or len(source_tx) != 32:
            raise ChainTraceError("MalformedEvent",
                                  "source_tx must be a 32-byte tx id")
        with self._lock:
            log = self._topics.setdefault(topic, [])
            seq = sum(1 for e in log if e.key == key)
            event = DomainEvent(topic, key, seq, dict(payload),
                                source_chain, source_tx)
            log.append(event)
            self._persist(event)
        return event

    # -- consumer side --------------------------------------------------------------
    def subscribe(self, topic: str, group: str, handler: Callable) -> None:
        if not group:
            raise ChainTraceError("MalformedEvent", "group name must be nonempty")
        with self._lock:
            if (topic, group) in self._subs:
                raise ChainTraceError(
                    "DuplicateGroupHandler",
                    f"group {group!r} already has a handler on {topic!r}")
            self._subs[(topic, group)] = _Subscription(
                topic, group, handler, self._load_offset(topic, group))

    def pump_once(self) -> int:
        """Deliver at most one event per subscription. Returns successes."""
        delivered = 0
        with self._lock:
            subs = list(self._subs.values())
        for sub in subs:
            with self._lock:
                log = self._topics.get(sub.topic, [])
                if sub.offset >= len(log):
                    continue
                event = log[sub.offset]
                sub.attempts += 1
                try:
                    if (self.crash_policy is not None
                            and self.crash_policy.should_crash(sub.attempts)):
                        raise InjectedConsumerCrash(
                            f"injected crash on attempt {sub.attempts}")
                    sub.handler(event)
                except Exception:
                    sub.failures += 1
                    continue
                sub.offset += 1
                self._store_offset(sub.topic, sub.group, sub.offset)
                self.delivery_log.append(
                    (sub.group, sub.topic, event.key, event.seq))
                delivered += 1
        return delivered

    def at_tips(self) -> bool:
        with self._lock:
            return all(
                sub.offset >= len(self._topics.get(sub.topic, []))
                for sub in self._subs.values())

    def quiesce(self, timeout: float = 10.0) -> None:
        """Pump until every group's offset reaches its topic tip."""
        deadline = time.monotonic() + timeout
        while not self.at_tips():
            progressed = self.pump_once()
            if progressed == 0:
                if time.monotonic() > deadline:
                    raise ChainTraceError(
                        "Timeout", "consumers did not reach topic tips")
                time.sleep(0.001)

    def lag(self) -> int:
        with self._lock:
            return sum(
                max(0, len(self._topics.get(sub.topic, [])) - sub.offset)
                for sub in self._subs.values())

    # -- threaded dispatch ------------------------------------------------------------
    def start(self) -> None:
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._dispatch,
                                        name="bus-dispatch", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._thread is None:
            return
        self._stop.set()
        self._thread.join()
        self._thread = None

    def _dispatch(self) -> None:
        while not self._stop.is_set():
            if self.pump_once() == 0:
                time.sleep(0.002)

    def close(self) -> None:
        self.stop()
        with self._lock:
            for fh in self._files.values():
                fh.close()
            self._files.clear()
            self._closed = True
