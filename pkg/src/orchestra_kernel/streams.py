"""Append-only, tagged message substrate.

Every exchange of data or control between components travels through a
stream: an ordered sequence of messages scoped to a session. Subscribers
select messages with include/exclude tag filters; delivery preserves
per-stream order and is exactly-once per subscription.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from queue import Empty, SimpleQueue
from typing import Callable, Iterable, Optional

from .errors import (
    PayloadTooLarge,
    SessionClosed,
    StreamClosed,
    UnknownSession,
    UnknownStream,
)

DEFAULT_PAYLOAD_CAP = 1 << 20  # bytes of encoded payload


class MessageKind(str, Enum):
    DATA = "DATA"
    CONTROL = "CONTROL"
    BOS = "BOS"
    EOS = "EOS"


@dataclass(frozen=True)
class Message:
    seq: int
    kind: MessageKind
    payload: object
    tags: frozenset
    producer: str
    session: str
    ts: int


@dataclass
class StreamRef:
    id: str
    session: str
    producer: str
    tags: frozenset
    state: str = "OPEN"  # OPEN | CLOSED

    @property
    def closed(self) -> bool:
        return self.state == "CLOSED"


def tag_matches(pattern: str, tag: str) -> bool:
    """Exact label match, or trailing-wildcard prefix match (``PREFIX*``)."""
    if pattern.endswith("*"):
        return tag.startswith(pattern[:-1])
    return pattern == tag


@dataclass(frozen=True)
class TagFilter:
    include: frozenset = frozenset()
    exclude: frozenset = frozenset()
    session_scope: Optional[str] = None

    @staticmethod
    def of(include: Iterable[str] = (), exclude: Iterable[str] = (),
           session_scope: Optional[str] = None) -> "TagFilter":
        return TagFilter(frozenset(include), frozenset(exclude), session_scope)

    def matches(self, message_tags: frozenset, stream_tags: frozenset,
                session: str) -> bool:
        if self.session_scope is not None and session != self.session_scope:
            return False
        tags = message_tags | stream_tags
        for pattern in self.exclude:
            if any(tag_matches(pattern, t) for t in tags):
                return False
        if not self.include:
            return True
        return any(tag_matches(p, t) for p in self.include for t in tags)

    def matches_message(self, ref: StreamRef, msg: Message) -> bool:
        return self.matches(msg.tags, ref.tags, msg.session)

    def to_dict(self) -> dict:
        return {
            "include": sorted(self.include),
            "exclude": sorted(self.exclude),
            "session_scope": self.session_scope,
        }

    @staticmethod
    def from_dict(data: dict) -> "TagFilter":
        return TagFilter.of(data.get("include", ()), data.get("exclude", ()),
                            data.get("session_scope"))


class ActivityTracker:
    """Counts in-flight work (queued deliveries, running processors) so
    callers can wait for the runtime to go quiet between external stimuli."""

    def __init__(self):
        self._n = 0
        self._cond = threading.Condition()

    def inc(self) -> None:
        with self._cond:
            self._n += 1

    def dec(self) -> None:
        with self._cond:
            self._n -= 1
            if self._n <= 0:
                self._cond.notify_all()

    @property
    def pending(self) -> int:
        with self._cond:
            return self._n

    def wait_idle(self, timeout: float = 10.0, settle: float = 0.05) -> bool:
        """True once no work has been in flight for a settle window."""
        deadline = time.monotonic() + timeout
        while True:
            with self._cond:
                while self._n > 0:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        return False
                    self._cond.wait(min(remaining, 0.25))
            time.sleep(settle)
            with self._cond:
                if self._n == 0:
                    return True
            if time.monotonic() >= deadline:
                return False


_SENTINEL = object()


class Subscription:
    """Delivery handle. With a callback, messages are dispatched serially on
    a dedicated thread; without one, consume via :meth:`get`."""

    def __init__(self, sub_id: int, filt: TagFilter,
                 callback: Optional[Callable[[StreamRef, Message], None]],
                 tracker: Optional[ActivityTracker], name: str = ""):
        self.id = sub_id
        self.filter = filt
        self.name = name or f"sub-{sub_id}"
        self._callback = callback
        self._tracker = tracker if callback is not None else None
        self._queue: SimpleQueue = SimpleQueue()
        self._closed = False
        self._thread: Optional[threading.Thread] = None
        if callback is not None:
            self._thread = threading.Thread(
                target=self._run, name=self.name, daemon=True)
            self._thread.start()

    def _run(self) -> None:
        while True:
            item = self._queue.get()
            if item is _SENTINEL:
                break
            try:
                self._callback(*item)
            except Exception:  # noqa: BLE001 - a bad callback must not kill delivery
                pass
            finally:
                if self._tracker:
                    self._tracker.dec()

    def deliver(self, ref: StreamRef, msg: Message) -> None:
        if self._closed:
            return
        if self._tracker:
            self._tracker.inc()
        self._queue.put((ref, msg))

    def get(self, timeout: Optional[float] = None):
        """Pull-mode consumption (only valid without a callback)."""
        if self._callback is not None:
            raise RuntimeError("subscription uses callback delivery")
        try:
            item = self._queue.get(timeout=timeout)
        except Empty:
            return None
        return None if item is _SENTINEL else item

    def close(self) -> None:
        self._closed = True
        self._queue.put(_SENTINEL)


class _StreamState:
    __slots__ = ("ref", "lock", "messages")

    def __init__(self, ref: StreamRef):
        self.ref = ref
        self.lock = threading.Lock()
        self.messages: list[Message] = []


class _SessionState:
    __slots__ = ("id", "active", "stream_id", "ordinals")

    def __init__(self, session_id: str, stream_id: str):
        self.id = session_id
        self.active = True
        self.stream_id = stream_id
        self.ordinals: dict[str, int] = {}


def now_ms() -> int:
    return int(time.time() * 1000)


class StreamSubstrate:
    """In-process stream store with pub/sub delivery and a per-session
    JSON-lines persistence log."""

    def __init__(self, data_dir: Optional[str] = None,
                 payload_cap: int = DEFAULT_PAYLOAD_CAP,
                 tracker: Optional[ActivityTracker] = None):
        self._lock = threading.Lock()
        self._streams: dict[str, _StreamState] = {}
        self._sessions: dict[str, _SessionState] = {}
        self._subs: dict[int, Subscription] = {}
        self._next_sub = 0
        self.payload_cap = payload_cap
        self.tracker = tracker or ActivityTracker()
        self._data_dir = Path(data_dir) if data_dir else None
        self._files: dict[str, object] = {}
        self._file_lock = threading.Lock()

    # -- session plumbing (driven by the session manager) -----------------

    def register_session(self, session_id: str) -> StreamRef:
        stream_id = f"SESSION:{session_id}:AGENT:SESSION:0"
        with self._lock:
            if session_id in self._sessions:
                raise ValueError(f"session {session_id} already registered")
            self._sessions[session_id] = _SessionState(session_id, stream_id)
        ref = self._make_stream(stream_id, session_id, "SESSION", frozenset())
        return ref

    def session_stream(self, session_id: str) -> StreamRef:
        state = self._session_state(session_id)
        return self._streams[state.stream_id].ref

    def session_active(self, session_id: str) -> bool:
        return self._session_state(session_id).active

    def deactivate_session(self, session_id: str) -> None:
        self._session_state(session_id).active = False

    def _session_state(self, session_id: str) -> _SessionState:
        with self._lock:
            state = self._sessions.get(session_id)
        if state is None:
            raise UnknownSession(f"unknown session: {session_id}")
        return state

    # -- streams -----------------------------------------------------------

    def create_stream(self, session: str, producer: str,
                      tags: Iterable[str] = (),
                      scope: Optional[str] = None) -> StreamRef:
        state = self._session_state(session)
        if not state.active:
            raise SessionClosed(f"session {session} is closed")
        with self._lock:
            ordinal = state.ordinals.get(producer, 0)
            state.ordinals[producer] = ordinal + 1
        prefix = scope or f"SESSION:{session}"
        stream_id = f"{prefix}:AGENT:{producer}:{ordinal}"
        ref = self._make_stream(stream_id, session, producer, frozenset(tags))
        self.append(
            state.stream_id, MessageKind.CONTROL,
            {"instruction": "STREAM_CREATED", "stream": stream_id,
             "producer": producer, "tags": sorted(tags)},
            tags=("SYS",), producer=producer)
        return ref

    def _make_stream(self, stream_id: str, session: str, producer: str,
                     tags: frozenset) -> StreamRef:
        ref = StreamRef(id=stream_id, session=session, producer=producer,
                        tags=tags)
        stream = _StreamState(ref)
        with self._lock:
            if stream_id in self._streams:
                raise ValueError(f"stream id collision: {stream_id}")
            self._streams[stream_id] = stream
        self._do_append(stream, MessageKind.BOS, None, frozenset(), producer)
        return ref

    def get_stream(self, stream_id: str) -> StreamRef:
        with self._lock:
            stream = self._streams.get(stream_id)
        if stream is None:
            raise UnknownStream(f"unknown stream: {stream_id}")
        return stream.ref

    def streams(self, session: Optional[str] = None) -> list[StreamRef]:
        with self._lock:
            refs = [s.ref for s in self._streams.values()]
        if session is not None:
            refs = [r for r in refs if r.session == session]
        return sorted(refs, key=lambda r: _stream_sort_key(r.id))

    # -- append / read -------------------------------------------------------

    def append(self, stream, kind: MessageKind, payload: object = None,
               tags: Iterable[str] = (), producer: Optional[str] = None) -> int:
        stream_id = stream.id if isinstance(stream, StreamRef) else stream
        with self._lock:
            state = self._streams.get(stream_id)
        if state is None:
            raise UnknownStream(f"unknown stream: {stream_id}")
        kind = MessageKind(kind)
        if kind == MessageKind.BOS:
            raise ValueError("BOS is written once at stream creation")
        if kind == MessageKind.CONTROL:
            if not isinstance(payload, dict) or "instruction" not in payload:
                raise ValueError("CONTROL payloads are maps with an 'instruction' key")
        msg = self._do_append(state, kind, payload, frozenset(tags),
                              producer or state.ref.producer)
        return msg.seq

    def _do_append(self, state: _StreamState, kind: MessageKind,
                   payload: object, tags: frozenset, producer: str) -> Message:
        encoded = json.dumps(payload, ensure_ascii=False)
        if len(encoded.encode("utf-8")) > self.payload_cap:
            raise PayloadTooLarge(
                f"payload of {len(encoded)} bytes exceeds cap {self.payload_cap}")
        with state.lock:
            if state.ref.closed:
                raise StreamClosed(f"stream {state.ref.id} is closed")
            msg = Message(seq=len(state.messages), kind=kind, payload=payload,
                          tags=tags, producer=producer,
                          session=state.ref.session, ts=now_ms())
            state.messages.append(msg)
            if kind == MessageKind.EOS:
                state.ref.state = "CLOSED"
            self._persist(state.ref, msg)
            with self._lock:
                subs = list(self._subs.values())
            for sub in subs:
                if sub.filter.matches(msg.tags, state.ref.tags, msg.session):
                    sub.deliver(state.ref, msg)
        return msg

    def read(self, stream, from_seq: int = 0) -> list[Message]:
        stream_id = stream.id if isinstance(stream, StreamRef) else stream
        with self._lock:
            state = self._streams.get(stream_id)
        if state is None:
            raise UnknownStream(f"unknown stream: {stream_id}")
        with state.lock:
            return list(state.messages[from_seq:])

    # -- pub/sub ---------------------------------------------------------------

    def subscribe(self, filt: TagFilter,
                  callback: Optional[Callable[[StreamRef, Message], None]] = None,
                  name: str = "") -> Subscription:
        with self._lock:
            self._next_sub += 1
            sub = Subscription(self._next_sub, filt, callback,
                               self.tracker, name)
            self._subs[sub.id] = sub
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            self._subs.pop(sub.id, None)
        sub.close()

    # -- lifecycle ---------------------------------------------------------------

    def close_session_streams(self, session_id: str) -> None:
        """Append EOS to every open stream of the session (session stream last)."""
        state = self._session_state(session_id)
        refs = self.streams(session_id)
        for ref in refs:
            if ref.id == state.stream_id or ref.closed:
                continue
            self.append(ref, MessageKind.EOS, None)
        session_ref = self._streams[state.stream_id].ref
        if not session_ref.closed:
            self.append(session_ref, MessageKind.EOS, None)

    def close(self) -> None:
        with self._lock:
            subs = list(self._subs.values())
            self._subs.clear()
        for sub in subs:
            sub.close()
        with self._file_lock:
            for handle in self._files.values():
                handle.close()
            self._files.clear()

    # -- transcripts -------------------------------------------------------------

    def dump_session(self, session_id: str) -> list[dict]:
        """Canonical transcript: streams sorted by id, messages by seq."""
        self._session_state(session_id)
        records = []
        for ref in self.streams(session_id):
            for msg in self.read(ref.id):
                records.append(message_record(ref.id, msg))
        return records

    def _persist(self, ref: StreamRef, msg: Message) -> None:
        if self._data_dir is None:
            return
        line = json.dumps(message_record(ref.id, msg), ensure_ascii=False)
        with self._file_lock:
            handle = self._files.get(ref.session)
            if handle is None:
                sessions_dir = self._data_dir / "sessions"
                sessions_dir.mkdir(parents=True, exist_ok=True)
                handle = open(sessions_dir / f"{ref.session}.jsonl", "a",
                              encoding="utf-8")
                self._files[ref.session] = handle
            handle.write(line + "\n")
            handle.flush()


def message_record(stream_id: str, msg: Message) -> dict:
    """Transcript record with a byte-stable field order."""
    return {
        "stream": stream_id,
        "seq": msg.seq,
        "kind": msg.kind.value,
        "tags": sorted(msg.tags),
        "payload": msg.payload,
        "producer": msg.producer,
        "session": msg.session,
        "ts": msg.ts,
    }


def _stream_sort_key(stream_id: str):
    parts = stream_id.split(":")
    key = []
    for part in parts:
        key.append((1, "", int(part)) if part.isdigit() else (0, part, 0))
    return key
