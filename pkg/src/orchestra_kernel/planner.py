"""Task planner: utterance + intent -> DAG of agent invocations.

Plans come from an intent-keyed template library; each template slot
names a capability phrase resolved to the top vector-search hit in the
agent registry. Plans are emitted to the session stream tagged PLAN.

Plan wire format (tag PLAN): ``{"plan_id", "state", "intent", "origin":
{"text", "event"}, "nodes": [{"id", "agent", "bindings", "status"}],
"edges": [{"from": "node.Param", "to": "node.Param", "needs_transform"}],
"meta"}``. Binding forms: ``{"edge": "node.Param"}``, ``{"literal": v}``,
``{"literal_source": "/path"}``, ``{"source": "USER.TEXT"|"USER.EVENT"}``.
"""
from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .agents import value_matches
from .errors import NoApplicableTemplate, UnknownAgent, UnresolvedAgentSlot
from .registry import AgentRegistry
from .streams import MessageKind, StreamSubstrate, TagFilter

INTENTS = ("JOB_SEARCH", "SUMMARIZE", "OPEN_QUERY", "LIST_EDIT", "SMALLTALK")

PLAN_STATES = ("PROPOSED", "APPROVED", "EXECUTING", "COMPLETED", "ABORTED")
NODE_STATES = ("PENDING", "RUNNING", "DONE", "FAILED", "SKIPPED")


@dataclass
class PlanNode:
    id: str
    agent_name: str
    input_bindings: dict = field(default_factory=dict)
    status: str = "PENDING"

    def to_dict(self) -> dict:
        return {"id": self.id, "agent": self.agent_name,
                "bindings": self.input_bindings, "status": self.status}


@dataclass
class TaskPlan:
    id: str
    intent: str
    origin: dict = field(default_factory=dict)    # {"text", "event"}
    nodes: dict = field(default_factory=dict)     # id -> PlanNode
    state: str = "PROPOSED"
    meta: dict = field(default_factory=dict)
    abort_reason: str = ""

    def edges(self) -> list:
        """(from_node, from_param, to_node, to_param, needs_transform)."""
        found = []
        for node in self.nodes.values():
            for param, binding in node.input_bindings.items():
                if isinstance(binding, dict) and "edge" in binding:
                    src_node, src_param = binding["edge"].split(".", 1)
                    found.append((src_node, src_param, node.id, param,
                                  bool(binding.get("needs_transform"))))
        return found

    def in_edges(self, node_id: str) -> list:
        return [e for e in self.edges() if e[2] == node_id]

    def to_wire(self) -> dict:
        return {
            "plan_id": self.id,
            "state": self.state,
            "intent": self.intent,
            "origin": self.origin,
            "nodes": [self.nodes[k].to_dict() for k in self.nodes],
            "edges": [{"from": f"{a}.{b}", "to": f"{c}.{d}",
                       "needs_transform": t}
                      for a, b, c, d, t in self.edges()],
            "meta": self.meta,
        }

    @staticmethod
    def from_wire(data: dict) -> "TaskPlan":
        nodes = {}
        for item in data["nodes"]:
            nodes[item["id"]] = PlanNode(id=item["id"], agent_name=item["agent"],
                                         input_bindings=dict(item["bindings"]),
                                         status=item.get("status", "PENDING"))
        return TaskPlan(id=data["plan_id"], intent=data.get("intent", ""),
                        origin=dict(data.get("origin", {})), nodes=nodes,
                        state=data.get("state", "PROPOSED"),
                        meta=dict(data.get("meta", {})))


@dataclass
class Violation:
    code: str
    detail: str

    def to_dict(self) -> dict:
        return {"code": self.code, "detail": self.detail}


DEFAULT_DECISION_TIMEOUT_S = 120.0


class _Waiter:
    __slots__ = ("event", "decision", "revision")

    def __init__(self):
        self.event = threading.Event()
        self.decision = None
        self.revision = None


class TaskPlanner:
    """Deterministic rule/template planner. An LLM-backed planner can
    satisfy the same surface behind this interface."""

    def __init__(self, registry: AgentRegistry, substrate: StreamSubstrate,
                 templates: list,
                 decision_timeout_s: float = DEFAULT_DECISION_TIMEOUT_S):
        self.registry = registry
        self.substrate = substrate
        self.templates = {t["intent"]: t for t in templates}
        self.decision_timeout_s = decision_timeout_s
        self._waiters: dict = {}
        self._lock = threading.Lock()
        self._decision_sub = None
        self._replan_sub = None

    def start_service(self) -> None:
        """Subscribe for plan decisions and replan requests."""
        self._decision_sub = self.substrate.subscribe(
            TagFilter.of(include={"DECISION"}), callback=self._on_decision,
            name="planner-decisions")
        self._replan_sub = self.substrate.subscribe(
            TagFilter.of(include={"REPLAN"}), callback=self._on_replan,
            name="planner-replans")

    def stop_service(self) -> None:
        for sub in (self._decision_sub, self._replan_sub):
            if sub is not None:
                self.substrate.unsubscribe(sub)

    # -- planning -----------------------------------------------------------

    def plan(self, utterance: str, intent: str, session_id: str,
             event: Optional[dict] = None, generation: int = 0) -> TaskPlan:
        plan = self.build(utterance, intent, event=event, generation=generation)
        violations, _warnings = self.validate(plan)
        if violations:
            raise ValueError("planner produced an invalid plan: "
                             + "; ".join(v.detail for v in violations))
        self.emit_plan(session_id, plan)
        return plan

    def build(self, utterance: str, intent: str,
              event: Optional[dict] = None, generation: int = 0) -> TaskPlan:
        if intent not in INTENTS:
            raise NoApplicableTemplate(f"unsupported intent: {intent}")
        template = self.templates.get(intent)
        if template is None:
            raise NoApplicableTemplate(f"no template for intent {intent}")
        nodes = {}
        resolved = []
        for slot in template["nodes"]:
            agent = self._fill_slot(slot["capability"])
            resolved.append((slot["id"], agent))
            bindings = {param: dict(binding)
                        for param, binding in (slot.get("bindings") or {}).items()}
            nodes[slot["id"]] = PlanNode(id=slot["id"], agent_name=agent,
                                         input_bindings=bindings)
        digest = hashlib.sha1(json.dumps(
            [intent, utterance, resolved], sort_keys=True).encode()).hexdigest()
        plan_id = f"plan-{digest[:10]}"
        if generation:
            plan_id = f"{plan_id}-r{generation}"
        plan = TaskPlan(id=plan_id, intent=intent,
                        origin={"text": utterance, "event": event},
                        nodes=nodes)
        if generation:
            plan.meta["generation"] = generation
        self._mark_transform_edges(plan)
        return plan

    def _fill_slot(self, capability: str) -> str:
        hits = self.registry.search_vector(capability, k=1)
        if not hits or hits[0][1] <= 0.0:
            raise UnresolvedAgentSlot(capability)
        return hits[0][0].name

    def _mark_transform_edges(self, plan: TaskPlan) -> None:
        for node in plan.nodes.values():
            try:
                descriptor = self.registry.get(node.agent_name).descriptor
            except UnknownAgent:
                continue
            for param, binding in node.input_bindings.items():
                if not isinstance(binding, dict):
                    continue
                if binding.get("source") in ("USER.TEXT", "USER.EVENT"):
                    source_type = ("TEXT" if binding["source"] == "USER.TEXT"
                                   else "EVENT")
                    try:
                        dst_type = descriptor.input(param).semantic_type
                    except Exception:  # noqa: BLE001 - validate reports it
                        continue
                    if dst_type != source_type:
                        binding["needs_transform"] = True
                elif "edge" in binding:
                    src_node, src_param = binding["edge"].split(".", 1)
                    src = plan.nodes.get(src_node)
                    if src is None:
                        continue
                    try:
                        src_spec = self.registry.get(
                            src.agent_name).descriptor.output(src_param)
                        dst_spec = descriptor.input(param)
                    except Exception:  # noqa: BLE001 - validate reports it
                        continue
                    if src_spec.semantic_type != dst_spec.semantic_type:
                        binding["needs_transform"] = True

    # -- validation ----------------------------------------------------------

    def validate(self, plan: TaskPlan):
        """Structural checks; returns (violations, warnings)."""
        violations: list = []
        warnings: list = []
        descriptors = {}
        for node in plan.nodes.values():
            try:
                descriptors[node.id] = self.registry.get(node.agent_name).descriptor
            except UnknownAgent:
                violations.append(Violation(
                    "UNKNOWN_AGENT", f"{node.id}: agent {node.agent_name!r} "
                                     "not in registry"))
        if self._has_cycle(plan):
            violations.append(Violation("CYCLE", "plan graph contains a cycle"))
        for node in plan.nodes.values():
            descriptor = descriptors.get(node.id)
            if descriptor is None:
                continue
            input_names = {s.name for s in descriptor.inputs}
            for param, binding in node.input_bindings.items():
                if param not in input_names:
                    violations.append(Violation(
                        "UNKNOWN_PARAM",
                        f"{node.id}: {node.agent_name} has no input {param!r}"))
                    continue
                spec = descriptor.input(param)
                if not isinstance(binding, dict):
                    violations.append(Violation(
                        "BAD_BINDING", f"{node.id}.{param}: malformed binding"))
                    continue
                if "edge" in binding:
                    problem = self._check_edge(plan, descriptors, node, param,
                                               binding)
                    if problem is not None:
                        violations.append(problem)
                    elif binding.get("needs_transform"):
                        warnings.append(
                            f"{binding['edge']} -> {node.id}.{param}: "
                            "NEEDS_TRANSFORM")
                elif "literal" in binding:
                    if not value_matches(spec.semantic_type, binding["literal"]):
                        violations.append(Violation(
                            "TYPE", f"{node.id}.{param}: literal does not "
                                    f"match {spec.semantic_type}"))
                elif "literal_source" in binding:
                    if spec.semantic_type != "TABLE":
                        violations.append(Violation(
                            "TYPE", f"{node.id}.{param}: registry sources bind "
                                    "to TABLE inputs"))
                elif binding.get("source") in ("USER.TEXT", "USER.EVENT"):
                    if binding.get("needs_transform"):
                        warnings.append(
                            f"{binding['source']} -> {node.id}.{param}: "
                            "NEEDS_TRANSFORM")
                else:
                    violations.append(Violation(
                        "BAD_BINDING", f"{node.id}.{param}: unknown binding "
                                       f"{binding!r}"))
            for spec in descriptor.inputs:
                if (spec.required and spec.default is None
                        and spec.name not in node.input_bindings):
                    violations.append(Violation(
                        "UNBOUND", f"{node.id}: required input "
                                   f"{spec.name!r} unbound"))
        return violations, warnings

    def _check_edge(self, plan, descriptors, node, param, binding):
        src_ref = binding["edge"]
        if "." not in src_ref:
            return Violation("BAD_EDGE", f"{node.id}.{param}: edge ref "
                                         f"{src_ref!r} is not node.Param")
        src_node, src_param = src_ref.split(".", 1)
        src = plan.nodes.get(src_node)
        if src is None:
            return Violation("BAD_EDGE", f"{node.id}.{param}: unknown node "
                                         f"{src_node!r}")
        src_descriptor = descriptors.get(src_node)
        if src_descriptor is None:
            return None  # UNKNOWN_AGENT already reported
        if not any(s.name == src_param for s in src_descriptor.outputs):
            return Violation("BAD_EDGE",
                             f"{src_node} has no output {src_param!r}")
        src_type = src_descriptor.output(src_param).semantic_type
        dst_type = descriptors[node.id].input(param).semantic_type
        if src_type != dst_type and not binding.get("needs_transform"):
            return Violation("TYPE",
                             f"{src_ref} ({src_type}) -> {node.id}.{param} "
                             f"({dst_type}) without transform")
        return None

    @staticmethod
    def _has_cycle(plan: TaskPlan) -> bool:
        incoming = {nid: set() for nid in plan.nodes}
        outgoing = {nid: set() for nid in plan.nodes}
        for src, _sp, dst, _dp, _t in plan.edges():
            if src in plan.nodes and dst in plan.nodes:
                incoming[dst].add(src)
                outgoing[src].add(dst)
        ready = [n for n, deps in incoming.items() if not deps]
        seen = 0
        while ready:
            node = ready.pop()
            seen += 1
            for nxt in outgoing[node]:
                incoming[nxt].discard(node)
                if not incoming[nxt]:
                    ready.append(nxt)
        return seen != len(plan.nodes)

    # -- propose / approve ------------------------------------------------------

    def emit_plan(self, session_id: str, plan: TaskPlan) -> None:
        session_stream = self.substrate.session_stream(session_id)
        self.substrate.append(session_stream, MessageKind.DATA, plan.to_wire(),
                              tags=("PLAN",), producer="TaskPlanner")

    def propose_and_await(self, plan: TaskPlan, session_id: str, mode: str,
                          timeout_s: Optional[float] = None):
        """AUTO approves immediately; INTERACTIVE blocks on a PLAN_DECISION
        control (timeout -> REJECTED). Returns (outcome, plan)."""
        if mode == "AUTO":
            plan.state = "APPROVED"
            return "APPROVED", plan
        waiter = _Waiter()
        with self._lock:
            self._waiters[(session_id, plan.id)] = waiter
        try:
            waiter.event.wait(timeout_s or self.decision_timeout_s)
        finally:
            with self._lock:
                self._waiters.pop((session_id, plan.id), None)
        decision = waiter.decision
        if decision == "approve":
            plan.state = "APPROVED"
            return "APPROVED", plan
        if decision == "revise":
            revised = self.apply_revision(plan, waiter.revision or {})
            plan.state = "ABORTED"
            plan.abort_reason = "revised"
            self.emit_plan(session_id, revised)
            return "REVISED", revised
        plan.state = "ABORTED"
        plan.abort_reason = "rejected" if decision == "reject" else "decision timeout"
        return "REJECTED", plan

    def apply_revision(self, plan: TaskPlan, revision: dict) -> TaskPlan:
        """Node agent substitution and literal edits; re-validated."""
        data = plan.to_wire()
        revised = TaskPlan.from_wire(data)
        generation = int(plan.meta.get("generation", 0)) + 1
        revised.id = f"{plan.id.split('-r')[0]}-r{generation}"
        revised.state = "PROPOSED"
        revised.meta = dict(plan.meta)
        revised.meta.update({"generation": generation, "revised_from": plan.id})
        for item in revision.get("replace_agent", ()):
            node = revised.nodes.get(item["node"])
            if node is None:
                raise ValueError(f"revision names unknown node {item['node']!r}")
            node.agent_name = item["agent"]
        for item in revision.get("set_literal", ()):
            node = revised.nodes.get(item["node"])
            if node is None:
                raise ValueError(f"revision names unknown node {item['node']!r}")
            node.input_bindings[item["param"]] = {"literal": item["value"]}
        self._mark_transform_edges(revised)
        violations, _ = self.validate(revised)
        if violations:
            raise ValueError("revision yields an invalid plan: "
                             + "; ".join(v.detail for v in violations))
        return revised

    # -- control-message handlers ----------------------------------------------------

    def _on_decision(self, ref, msg) -> None:
        payload = msg.payload
        if not isinstance(payload, dict):
            return
        if payload.get("instruction") != "PLAN_DECISION":
            return
        with self._lock:
            waiter = self._waiters.get((msg.session, payload.get("plan")))
        if waiter is None:
            return
        waiter.decision = payload.get("decision")
        waiter.revision = payload.get("revision")
        waiter.event.set()

    def _on_replan(self, ref, msg) -> None:
        payload = msg.payload
        if not isinstance(payload, dict) or payload.get("instruction") != "REPLAN":
            return
        origin = payload.get("origin") or {}
        generation = int(payload.get("generation", 0)) + 1
        try:
            plan = self.build(origin.get("text", ""),
                              payload.get("intent") or "",
                              event=origin.get("event"),
                              generation=generation)
            plan.meta["replanned_from"] = payload.get("plan")
            self.emit_plan(msg.session, plan)
        except Exception:  # noqa: BLE001 - replan failures surface via timeout
            pass

    def pending_decisions(self, session_id: str) -> list:
        with self._lock:
            return sorted(plan_id for sid, plan_id in self._waiters
                          if sid == session_id)
