"""Agent runtime.

Hosts agent instances inside the process (a simulated agent factory):
subscribed messages are routed into per-input places, transitions fire
when the trigger policy is satisfied, processors run on a bounded worker
pool, and outputs are emitted to fresh per-invocation streams.
"""
from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .errors import (
    InvalidDescriptor,
    SessionClosed,
    TypeMismatch,
    UnknownParam,
)
from .streams import Message, MessageKind, StreamRef, StreamSubstrate, TagFilter

SEMANTIC_TYPES = ("TEXT", "NUMBER", "BOOLEAN", "RECORD", "TABLE", "FORM",
                  "EVENT", "PLAN")

ALL_PLACES = "ALL_PLACES"
PAIRED = "PAIRED"


def value_matches(semantic_type: str, value) -> bool:
    if value is None:
        return False
    if semantic_type == "TEXT":
        return isinstance(value, str)
    if semantic_type == "NUMBER":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if semantic_type == "BOOLEAN":
        return isinstance(value, bool)
    if semantic_type == "RECORD":
        return isinstance(value, Mapping)
    if semantic_type == "TABLE":
        return isinstance(value, Mapping) and "columns" in value and "rows" in value
    if semantic_type == "FORM":
        return isinstance(value, Mapping) and "form_id" in value and "fields" in value
    if semantic_type == "EVENT":
        return isinstance(value, Mapping) and "type" in value
    if semantic_type == "PLAN":
        return isinstance(value, Mapping) and "plan_id" in value and "nodes" in value
    return False


def _default_route_tag(name: str) -> str:
    return name.upper().replace(" ", "_")


@dataclass
class ParamSpec:
    name: str
    semantic_type: str
    description: str = ""
    default: object = None
    required: bool = True
    route_tags: frozenset = frozenset()   # inputs: tags that deposit here
    tags: frozenset = frozenset()         # outputs: stream-wide tags on emit

    def effective_route_tags(self) -> frozenset:
        return self.route_tags or frozenset({_default_route_tag(self.name)})

    def to_dict(self) -> dict:
        return {"name": self.name, "semantic_type": self.semantic_type,
                "description": self.description, "default": self.default,
                "required": self.required, "route_tags": sorted(self.route_tags),
                "tags": sorted(self.tags)}

    @staticmethod
    def from_dict(data: dict) -> "ParamSpec":
        return ParamSpec(name=data["name"], semantic_type=data["semantic_type"],
                         description=data.get("description", ""),
                         default=data.get("default"),
                         required=bool(data.get("required", True)),
                         route_tags=frozenset(data.get("route_tags", ())),
                         tags=frozenset(data.get("tags", ())))


@dataclass
class TriggerPolicy:
    kind: str = ALL_PLACES
    pairing_key: Optional[str] = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "pairing_key": self.pairing_key}

    @staticmethod
    def from_dict(data) -> "TriggerPolicy":
        if isinstance(data, str):
            return TriggerPolicy(kind=data)
        return TriggerPolicy(kind=data.get("kind", ALL_PLACES),
                             pairing_key=data.get("pairing_key"))


@dataclass
class QoSHints:
    cost: float = 0.0
    latency_ms: float = 0.0
    quality: float = 1.0

    def to_dict(self) -> dict:
        return {"cost": self.cost, "latency_ms": self.latency_ms,
                "quality": self.quality}

    @staticmethod
    def from_dict(data: dict) -> "QoSHints":
        return QoSHints(cost=float(data.get("cost", 0.0)),
                        latency_ms=float(data.get("latency_ms", 0.0)),
                        quality=float(data.get("quality", 1.0)))


@dataclass
class AgentDescriptor:
    name: str
    description: str = ""
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    listen_rules: Optional[TagFilter] = None
    trigger_policy: TriggerPolicy = field(default_factory=TriggerPolicy)
    worker_pool_size: int = 1
    deployment: dict = field(default_factory=dict)
    qos: Optional[QoSHints] = None
    processor_ref: str = ""
    timeout_s: float = 30.0

    def validate(self) -> None:
        if not self.name or not isinstance(self.name, str):
            raise InvalidDescriptor("agent name required")
        if not self.outputs:
            raise InvalidDescriptor(f"{self.name}: at least one output required")
        if self.worker_pool_size < 1:
            raise InvalidDescriptor(f"{self.name}: worker_pool_size must be >= 1")
        if self.trigger_policy.kind not in (ALL_PLACES, PAIRED):
            raise InvalidDescriptor(
                f"{self.name}: unknown trigger policy {self.trigger_policy.kind}")
        if self.trigger_policy.kind == PAIRED and not self.trigger_policy.pairing_key:
            raise InvalidDescriptor(f"{self.name}: PAIRED requires a pairing key")
        seen = set()
        for spec in list(self.inputs) + list(self.outputs):
            if spec.name in seen:
                raise InvalidDescriptor(
                    f"{self.name}: duplicate parameter {spec.name!r}")
            seen.add(spec.name)
            if spec.semantic_type not in SEMANTIC_TYPES:
                raise InvalidDescriptor(
                    f"{self.name}: bad semantic type {spec.semantic_type!r}")
            if spec.default is not None and not value_matches(spec.semantic_type,
                                                              spec.default):
                raise InvalidDescriptor(
                    f"{self.name}: default for {spec.name!r} does not type-check")
        if self.deployment is not None and not isinstance(self.deployment, dict):
            raise InvalidDescriptor(f"{self.name}: deployment must be a map")
        if self.deployment:
            # stored and validated only; agents run in-process
            if not isinstance(self.deployment.get("image"), str):
                raise InvalidDescriptor(
                    f"{self.name}: deployment needs an 'image' name")
            config = self.deployment.get("config", {})
            if not isinstance(config, dict):
                raise InvalidDescriptor(
                    f"{self.name}: deployment config must be a map")

    def input(self, name: str) -> ParamSpec:
        for spec in self.inputs:
            if spec.name == name:
                return spec
        raise UnknownParam(f"{self.name}: unknown input {name!r}")

    def output(self, name: str) -> ParamSpec:
        for spec in self.outputs:
            if spec.name == name:
                return spec
        raise UnknownParam(f"{self.name}: unknown output {name!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "inputs": [p.to_dict() for p in self.inputs],
            "outputs": [p.to_dict() for p in self.outputs],
            "listen_rules": self.listen_rules.to_dict() if self.listen_rules else None,
            "trigger_policy": self.trigger_policy.to_dict(),
            "worker_pool_size": self.worker_pool_size,
            "deployment": dict(self.deployment),
            "qos": self.qos.to_dict() if self.qos else None,
            "processor_ref": self.processor_ref,
            "timeout_s": self.timeout_s,
        }

    @staticmethod
    def from_dict(data: dict) -> "AgentDescriptor":
        listen = data.get("listen_rules")
        qos = data.get("qos")
        return AgentDescriptor(
            name=data["name"],
            description=data.get("description", ""),
            inputs=[ParamSpec.from_dict(p) for p in data.get("inputs", ())],
            outputs=[ParamSpec.from_dict(p) for p in data.get("outputs", ())],
            listen_rules=TagFilter.from_dict(listen) if listen else None,
            trigger_policy=TriggerPolicy.from_dict(
                data.get("trigger_policy", {})),
            worker_pool_size=int(data.get("worker_pool_size", 1)),
            deployment=dict(data.get("deployment", {})),
            qos=QoSHints.from_dict(qos) if qos else None,
            processor_ref=data.get("processor_ref", ""),
            timeout_s=float(data.get("timeout_s", 30.0)),
        )


@dataclass
class Token:
    value: object
    key: object = None
    source: Optional[tuple] = None        # (stream_id, seq)
    attribution: Optional[dict] = None    # plan/node context for coordinator


class TriggerState:
    """Per-input FIFO places with ALL_PLACES or PAIRED firing.

    Not thread-safe on its own; the owning instance serializes access.
    """

    def __init__(self, inputs: list, policy: TriggerPolicy):
        self.specs = {spec.name: spec for spec in inputs}
        self.policy = policy
        self.places = {spec.name: deque() for spec in inputs}
        self._key_order: list = []

    def deposit(self, param: str, token: Token) -> None:
        if param not in self.places:
            raise UnknownParam(f"unknown input place: {param}")
        if self.policy.kind == PAIRED and token.key is None:
            token.key = _pairing_key(token.value, self.policy.pairing_key)
        self.places[param].append(token)
        if self.policy.kind == PAIRED and token.key not in self._key_order:
            self._key_order.append(token.key)

    def depth(self, param: str) -> int:
        if param not in self.places:
            raise UnknownParam(f"unknown input place: {param}")
        return len(self.places[param])

    def depths(self) -> dict:
        return {name: len(q) for name, q in self.places.items()}

    def next_firing(self) -> Optional[dict]:
        """Pop and return one token per place for the next enabled firing."""
        if self.policy.kind == PAIRED:
            return self._next_paired()
        required = [name for name, spec in self.specs.items() if spec.required]
        if any(not self.places[name] for name in required):
            return None
        if not any(self.places.values()):
            return None
        firing = {}
        for name, spec in self.specs.items():
            queue = self.places[name]
            firing[name] = queue.popleft() if queue else Token(value=spec.default)
        return firing

    def _next_paired(self) -> Optional[dict]:
        for key in list(self._key_order):
            if all(any(t.key == key for t in q) for q in self.places.values()):
                firing = {}
                for name, queue in self.places.items():
                    idx = next(i for i, t in enumerate(queue) if t.key == key)
                    token = queue[idx]
                    del queue[idx]
                    firing[name] = token
                if not any(any(t.key == key for t in q)
                           for q in self.places.values()):
                    self._key_order.remove(key)
                return firing
        return None


def _pairing_key(value, key_name):
    if isinstance(value, Mapping):
        return value.get(key_name)
    return value


class Invocation:
    """One processor run: inputs, attribution, output streams, watchdog state."""

    _counter = 0
    _counter_lock = threading.Lock()

    def __init__(self, instance: "AgentInstance", inputs: dict,
                 attribution: Optional[dict]):
        with Invocation._counter_lock:
            Invocation._counter += 1
            self.id = Invocation._counter
        self.instance = instance
        self.inputs = inputs
        self.attribution = attribution
        self.started_wall = time.time()
        self.started = time.monotonic()
        self.deadline = self.started + instance.descriptor.timeout_s
        self.cancelled = threading.Event()
        self.finished = threading.Event()
        self.streams: dict = {}
        self.outputs: list = []
        self.error: Optional[str] = None

    @property
    def elapsed_ms(self) -> float:
        return (time.monotonic() - self.started) * 1000.0


class AgentContext:
    """Handed to processors: session identity, per-instance state, emit,
    budget handle, and access to kernel services."""

    def __init__(self, instance: "AgentInstance", invocation: Invocation):
        self.instance = instance
        self.invocation = invocation
        self.session = instance.session_id
        self.state = instance.state
        self.kernel = instance.host.kernel
        self.budget = instance.host.budget_for(instance.session_id)

    @property
    def attribution(self) -> Optional[dict]:
        return self.invocation.attribution

    def emit(self, param: str, value, tags: Iterable[str] = (),
             attribution: Optional[dict] = None) -> Optional[StreamRef]:
        return self.instance._emit(self.invocation, param, value, tags,
                                   attribution=attribution)

    def charge(self, cost: float = 0.0, latency_ms: float = 0.0) -> None:
        if self.budget is not None:
            self.budget.charge(cost=cost, latency_ms=latency_ms)


class AgentInstance:
    def __init__(self, host: "AgentHost", descriptor: AgentDescriptor,
                 session_id: str, instance_id: str):
        self.host = host
        self.descriptor = descriptor
        self.session_id = session_id
        self.id = instance_id
        self.scope: Optional[str] = None
        self.trigger = TriggerState(descriptor.inputs, descriptor.trigger_policy)
        self.state: dict = {}
        self.lock = threading.RLock()
        self.retired = False
        self.firings = 0
        self._error_stream: Optional[StreamRef] = None
        self._subs: list = []
        from concurrent.futures import ThreadPoolExecutor
        self.pool = ThreadPoolExecutor(
            max_workers=descriptor.worker_pool_size,
            thread_name_prefix=f"{instance_id}-worker")

    # -- PetriNet surface ---------------------------------------------------

    def deposit(self, param: str, value, key=None, source=None,
                attribution: Optional[dict] = None) -> dict:
        """Enqueue one token and pump any enabled firings. Returns depths."""
        token = Token(value=value, key=key, source=source,
                      attribution=attribution)
        with self.lock:
            self.trigger.deposit(param, token)
            self._pump_locked()
            return self.trigger.depths()

    def deposit_tuple(self, values: dict, attribution: Optional[dict] = None) -> None:
        """Deposit a full input binding atomically (coordinator dispatch)."""
        with self.lock:
            for param, value in values.items():
                self.trigger.deposit(param, Token(value=value,
                                                  attribution=attribution))
            self._pump_locked()

    def fire(self) -> list:
        """Pump enabled transitions; returns the input tuples dispatched."""
        with self.lock:
            return self._pump_locked()

    def _pump_locked(self) -> list:
        fired = []
        while True:
            firing = self.trigger.next_firing()
            if firing is None:
                break
            values = {name: tok.value for name, tok in firing.items()}
            attribution = next((tok.attribution for tok in firing.values()
                                if tok.attribution is not None), None)
            invocation = Invocation(self, values, attribution)
            self.firings += 1
            fired.append(values)
            self.host.tracker.inc()
            self.pool.submit(self._run_invocation, invocation)
        return fired

    # -- processor execution ---------------------------------------------------

    def _run_invocation(self, invocation: Invocation) -> None:
        self.host._watch(invocation)
        ctx = AgentContext(self, invocation)
        try:
            processor = self.host.resolve_processor(self.descriptor)
            outputs = processor(invocation.inputs, ctx)
            if outputs:
                for param, value, tags in outputs:
                    self._emit(invocation, param, value, tags)
        except Exception as exc:  # noqa: BLE001 - fault isolation
            if not invocation.cancelled.is_set():
                invocation.error = type(exc).__name__
                self._emit_error(type(exc).__name__, str(exc))
        finally:
            timed_out = invocation.cancelled.is_set()
            invocation.finished.set()
            self.host._unwatch(invocation)
            if not timed_out:
                self.host._notify_invocation_done(self, invocation)
            self.host.tracker.dec()

    def _emit(self, invocation: Optional[Invocation], param: str, value,
              tags: Iterable[str] = (),
              attribution: Optional[dict] = None) -> Optional[StreamRef]:
        spec = self.descriptor.output(param)
        if not value_matches(spec.semantic_type, value):
            raise TypeMismatch(
                f"{self.descriptor.name}.{param}: value does not match "
                f"{spec.semantic_type}")
        if invocation is not None and invocation.cancelled.is_set():
            return None
        attribution = attribution or (invocation.attribution if invocation else None)
        extra = frozenset(attribution.get("result_tags", ())) if attribution else frozenset()
        if invocation is not None:
            ref = invocation.streams.get(param)
            if ref is None:
                ref = self.host.substrate.create_stream(
                    self.session_id, self.descriptor.name,
                    tags=spec.tags, scope=self.scope)
                invocation.streams[param] = ref
        else:
            ref = self.host.substrate.create_stream(
                self.session_id, self.descriptor.name,
                tags=spec.tags, scope=self.scope)
        seq = self.host.substrate.append(ref, MessageKind.DATA, value,
                                         tags=frozenset(tags) | extra,
                                         producer=self.id)
        if invocation is not None:
            invocation.outputs.append((param, value))
        self.host._notify_output(self, attribution, param, value, ref, seq)
        return ref

    def emit(self, param: str, value, tags: Iterable[str] = ()) -> StreamRef:
        """Standalone emission outside a firing (tests, manual driving)."""
        return self._emit(None, param, value, tags)

    def _emit_error(self, reason: str, detail: str = "") -> None:
        with self.lock:
            if self._error_stream is None or self._error_stream.closed:
                self._error_stream = self.host.substrate.create_stream(
                    self.session_id, self.descriptor.name,
                    tags=("ERROR",), scope=self.scope)
            ref = self._error_stream
        self.host.substrate.append(
            ref, MessageKind.CONTROL,
            {"instruction": "ERROR", "agent": self.descriptor.name,
             "instance": self.id, "reason": reason, "detail": detail[:500]},
            tags=("ERROR",), producer=self.id)

    def retire(self) -> None:
        with self.lock:
            if self.retired:
                return
            self.retired = True
        for sub in self._subs:
            self.host.substrate.unsubscribe(sub)
        self.pool.shutdown(wait=False)


ProcessorFn = Callable[[dict, AgentContext], Optional[Iterable]]


class AgentHost:
    """Simulated agent factory: spawns instances, routes messages into
    places, monitors processor deadlines."""

    def __init__(self, substrate: StreamSubstrate,
                 processors: Optional[dict] = None,
                 budget_resolver: Optional[Callable] = None):
        self.substrate = substrate
        self.tracker = substrate.tracker
        self.kernel = None  # set by the kernel after wiring
        self.processors: dict[str, ProcessorFn] = dict(processors or {})
        self._budget_resolver = budget_resolver
        self._instances: list[AgentInstance] = []
        self._instance_counts: dict = {}
        self._lock = threading.Lock()
        self._output_listeners: list = []
        self._invocation_listeners: list = []
        self._watched: dict[int, Invocation] = {}
        self._watch_lock = threading.Lock()
        self._stop = threading.Event()
        self._watchdog = threading.Thread(target=self._watch_loop,
                                          name="agent-watchdog", daemon=True)
        self._watchdog.start()

    # -- lifecycle -------------------------------------------------------------

    def instantiate(self, descriptor: AgentDescriptor,
                    session_id: str) -> AgentInstance:
        descriptor.validate()
        if not self.substrate.session_active(session_id):
            raise SessionClosed(f"session {session_id} is closed")
        with self._lock:
            count = self._instance_counts.get((session_id, descriptor.name), 0) + 1
            self._instance_counts[(session_id, descriptor.name)] = count
        instance = AgentInstance(self, descriptor, session_id,
                                 f"{descriptor.name}#{count}")
        session_stream = self.substrate.session_stream(session_id)
        self.substrate.append(
            session_stream, MessageKind.CONTROL,
            {"instruction": "AGENT_ENTER", "agent": descriptor.name,
             "instance": instance.id},
            tags=("SYS",), producer=instance.id)
        if descriptor.listen_rules is not None:
            listen_filter = TagFilter(descriptor.listen_rules.include,
                                      descriptor.listen_rules.exclude,
                                      session_id)
            sub = self.substrate.subscribe(
                listen_filter,
                callback=lambda ref, msg, inst=instance: self._on_listen(inst, ref, msg),
                name=f"{instance.id}-listen")
            instance._subs.append(sub)
        command_filter = TagFilter(frozenset({"EXEC"}), frozenset(), session_id)
        sub = self.substrate.subscribe(
            command_filter,
            callback=lambda ref, msg, inst=instance: self._on_command(inst, ref, msg),
            name=f"{instance.id}-exec")
        instance._subs.append(sub)
        with self._lock:
            self._instances.append(instance)
        return instance

    def retire(self, instance: AgentInstance) -> None:
        if instance.retired:
            return
        instance.retire()
        session_stream = self.substrate.session_stream(instance.session_id)
        if not session_stream.closed:
            self.substrate.append(
                session_stream, MessageKind.CONTROL,
                {"instruction": "AGENT_EXIT", "agent": instance.descriptor.name,
                 "instance": instance.id},
                tags=("SYS",), producer=instance.id)
        with self._lock:
            if instance in self._instances:
                self._instances.remove(instance)

    def retire_session(self, session_id: str) -> None:
        with self._lock:
            instances = [i for i in self._instances if i.session_id == session_id]
        for instance in instances:
            self.retire(instance)

    def instances(self, session_id: Optional[str] = None) -> list:
        with self._lock:
            found = list(self._instances)
        if session_id is not None:
            found = [i for i in found if i.session_id == session_id]
        return found

    def close(self) -> None:
        self._stop.set()
        with self._lock:
            instances = list(self._instances)
        for instance in instances:
            instance.retire()

    # -- message routing -------------------------------------------------------

    def _on_listen(self, instance: AgentInstance, ref: StreamRef,
                   msg: Message) -> None:
        if instance.retired or msg.kind not in (MessageKind.DATA,):
            return
        if msg.producer == instance.id:
            return
        visible = msg.tags | ref.tags
        for spec in instance.descriptor.inputs:
            if spec.effective_route_tags() & visible:
                instance.deposit(spec.name, msg.payload,
                                 source=(ref.id, msg.seq))
                return
        required = [s for s in instance.descriptor.inputs if s.required]
        if len(required) == 1:
            instance.deposit(required[0].name, msg.payload,
                             source=(ref.id, msg.seq))
        elif len(instance.descriptor.inputs) == 1:
            instance.deposit(instance.descriptor.inputs[0].name, msg.payload,
                             source=(ref.id, msg.seq))

    def _on_command(self, instance: AgentInstance, ref: StreamRef,
                    msg: Message) -> None:
        if instance.retired or msg.kind != MessageKind.CONTROL:
            return
        payload = msg.payload
        if not isinstance(payload, Mapping) or payload.get("instruction") != "EXECUTE":
            return
        if payload.get("agent") != instance.descriptor.name:
            return
        if payload.get("instance") and payload["instance"] != instance.id:
            return
        attribution = {
            "plan": payload.get("plan"),
            "node": payload.get("node"),
            "result_tags": payload.get("result_tags", []),
        }
        instance.deposit_tuple(dict(payload.get("inputs", {})), attribution)

    # -- processor resolution / listeners ----------------------------------------

    def resolve_processor(self, descriptor: AgentDescriptor) -> ProcessorFn:
        ref = descriptor.processor_ref
        if ref in self.processors:
            return self.processors[ref]
        if ref.startswith("builtin:"):
            from . import builtins as builtin_agents
            return builtin_agents.PROCESSORS[ref.split(":", 1)[1]]
        raise InvalidDescriptor(f"no processor registered for {ref!r}")

    def register_processor(self, name: str, fn: ProcessorFn) -> None:
        self.processors[name] = fn

    def add_output_listener(self, fn: Callable) -> Callable:
        self._output_listeners.append(fn)
        return fn

    def remove_output_listener(self, fn: Callable) -> None:
        if fn in self._output_listeners:
            self._output_listeners.remove(fn)

    def add_invocation_listener(self, fn: Callable) -> Callable:
        self._invocation_listeners.append(fn)
        return fn

    def remove_invocation_listener(self, fn: Callable) -> None:
        if fn in self._invocation_listeners:
            self._invocation_listeners.remove(fn)

    def _notify_output(self, instance, attribution, param, value, ref, seq):
        for listener in list(self._output_listeners):
            try:
                listener(instance, attribution, param, value, ref, seq)
            except Exception:  # noqa: BLE001
                pass

    def _notify_invocation_done(self, instance, invocation):
        for listener in list(self._invocation_listeners):
            try:
                listener(instance, invocation)
            except Exception:  # noqa: BLE001
                pass

    def budget_for(self, session_id: str):
        if self._budget_resolver is None:
            return None
        return self._budget_resolver(session_id)

    def set_budget_resolver(self, fn: Callable) -> None:
        self._budget_resolver = fn

    # -- processor timeout watchdog ------------------------------------------------

    def _watch(self, invocation: Invocation) -> None:
        with self._watch_lock:
            self._watched[invocation.id] = invocation

    def _unwatch(self, invocation: Invocation) -> None:
        with self._watch_lock:
            self._watched.pop(invocation.id, None)

    def _watch_loop(self) -> None:
        while not self._stop.wait(0.025):
            now = time.monotonic()
            with self._watch_lock:
                expired = [inv for inv in self._watched.values()
                           if now > inv.deadline and not inv.finished.is_set()]
                for inv in expired:
                    self._watched.pop(inv.id, None)
            for inv in expired:
                if inv.cancelled.is_set():
                    continue
                inv.cancelled.set()
                instance = inv.instance
                elapsed = inv.elapsed_ms
                instance._emit_error(
                    "TIMEOUT",
                    f"processor exceeded {instance.descriptor.timeout_s}s "
                    f"(elapsed {elapsed:.0f}ms)")
                budget = self.budget_for(instance.session_id)
                if budget is not None:
                    budget.charge(cost=0.0, latency_ms=elapsed)
                inv.error = "TIMEOUT"
                self._notify_invocation_done(instance, inv)
