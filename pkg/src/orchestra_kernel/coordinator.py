"""Budget-aware execution of approved task plans.

Dispatches plan nodes as EXECUTE controls in dependency order, invokes
the data planner for NEEDS_TRANSFORM edges, records accrual on the
session stream after every node, and reacts to budget violations per
the session policy (ABORT / CONFIRM / REPLAN).

Budget event schema (tag BUDGET): ``{"instruction": "BUDGET", "node",
"charge": {"cost", "latency_ms"}, "accrued": {"cost", "latency_ms",
"quality"}, "allocated": {"cost", "latency_ms", "min_quality"}}``.

Activity custody: the coordinator holds the substrate's activity tracker
while it is actually planning/dispatching and releases it while blocked
on user decisions or node outputs, so ``Kernel.drain`` treats
user-facing waits as quiescence. Output/done hooks transfer one activity
count with each queued event.
"""
from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from queue import Empty, SimpleQueue
from typing import Optional

from .dataplan import DataPlanner
from .errors import (
    MissingCostHints,
    NoFeasiblePlan,
    OperatorFailed,
    SourceUnavailable,
    TransformFailed,
)
from .optimizer import NodeCost, QoSVector, estimate_dag
from .planner import TaskPlan, TaskPlanner
from .streams import MessageKind, StreamSubstrate, TagFilter

POLICIES = ("ABORT", "CONFIRM", "REPLAN")


@dataclass
class BudgetLimits:
    cost: float = math.inf
    latency_ms: float = math.inf
    min_quality: float = 0.0

    def to_dict(self) -> dict:
        # None encodes "unlimited"; raw inf is not portable JSON
        return {"cost": None if math.isinf(self.cost) else self.cost,
                "latency_ms": (None if math.isinf(self.latency_ms)
                               else self.latency_ms),
                "min_quality": self.min_quality}


class Budget:
    """Allocated vs. accrued cost/latency/quality for one session.

    Accrued cost and latency are monotone nondecreasing; quality is the
    running minimum of node quality hints along the executed path.
    """

    def __init__(self, allocated: BudgetLimits, policy: str = "ABORT"):
        if policy not in POLICIES:
            raise ValueError(f"unknown budget policy {policy!r}")
        self.allocated = allocated
        self.policy = policy
        self.projected: Optional[QoSVector] = None
        self._lock = threading.Lock()
        self._cost = 0.0
        self._latency_ms = 0.0
        self._quality = 1.0
        self.waived: set = set()
        self.confirmations: list = []

    @staticmethod
    def unlimited() -> "Budget":
        return Budget(BudgetLimits())

    @staticmethod
    def from_config(config: dict) -> "Budget":
        limits = BudgetLimits(
            cost=float(config.get("cost", math.inf)),
            latency_ms=float(config.get("latency_ms", math.inf)),
            min_quality=float(config.get("min_quality", 0.0)))
        return Budget(limits, policy=config.get("policy", "ABORT"))

    def charge(self, cost: float = 0.0, latency_ms: float = 0.0,
               quality: Optional[float] = None) -> None:
        if cost < 0 or latency_ms < 0:
            raise ValueError("charges cannot be negative")
        with self._lock:
            self._cost += cost
            self._latency_ms += latency_ms
            if quality is not None:
                self._quality = min(self._quality, quality)

    @property
    def accrued(self) -> QoSVector:
        with self._lock:
            return QoSVector(self._cost, self._latency_ms, self._quality)

    def waive(self, dimension: str) -> None:
        with self._lock:
            self.waived.add(dimension)

    def snapshot(self) -> dict:
        accrued = self.accrued
        return {
            "allocated": self.allocated.to_dict(),
            "projected": self.projected.to_dict() if self.projected else None,
            "accrued": {"cost": accrued.cost, "latency_ms": accrued.latency_ms,
                        "quality": accrued.quality},
            "policy": self.policy,
            "waived": sorted(self.waived),
        }


def check_budget(budget: Budget, estimate: QoSVector):
    """PROCEED or ("VIOLATION", dimension) against the next charge."""
    accrued = budget.accrued
    allocated = budget.allocated
    if ("cost" not in budget.waived
            and accrued.cost + estimate.cost > allocated.cost):
        return "VIOLATION", "cost"
    if ("latency" not in budget.waived
            and accrued.latency_ms + estimate.latency_ms > allocated.latency_ms):
        return "VIOLATION", "latency"
    if ("quality" not in budget.waived
            and min(accrued.quality, estimate.quality) < allocated.min_quality):
        return "VIOLATION", "quality"
    return "PROCEED", None


class _PlanRun:
    """Mutable bookkeeping for one executing plan."""

    def __init__(self, plan: TaskPlan):
        self.plan = plan
        self.cache: dict = {}          # (node_id, param) -> value
        self.events: SimpleQueue = SimpleQueue()
        self.dispatched_at: dict = {}
        self.invocation_ms: dict = {}
        self.dispatch_count = 0


class _ConfirmWaiter:
    __slots__ = ("event", "decision")

    def __init__(self):
        self.event = threading.Event()
        self.decision = None


class TaskCoordinator:
    def __init__(self, substrate: StreamSubstrate, registry, sessions,
                 planner: TaskPlanner, data_planner: DataPlanner,
                 data_registry=None, store=None,
                 node_timeout_s: float = 30.0,
                 confirm_timeout_s: float = 120.0):
        self.substrate = substrate
        self.registry = registry
        self.sessions = sessions
        self.planner = planner
        self.data_planner = data_planner
        self.data_registry = data_registry
        self.store = store
        self.node_timeout_s = node_timeout_s
        self.confirm_timeout_s = confirm_timeout_s
        self.host = None  # wired by the kernel
        self._plan_states: dict = {}       # (session, plan_id) -> state
        self._confirm_waiters: dict = {}
        self._confirm_counter = 0
        self._lock = threading.Lock()
        self._subs: list = []

    def start_service(self) -> None:
        self._subs.append(self.substrate.subscribe(
            TagFilter.of(include={"PLAN"}), callback=self._on_plan,
            name="coordinator-plans"))
        self._subs.append(self.substrate.subscribe(
            TagFilter.of(include={"DECISION"}), callback=self._on_decision,
            name="coordinator-decisions"))

    def stop_service(self) -> None:
        for sub in self._subs:
            self.substrate.unsubscribe(sub)
        self._subs.clear()

    # -- plan intake ------------------------------------------------------------

    def _on_plan(self, ref, msg) -> None:
        payload = msg.payload
        if not isinstance(payload, dict) or payload.get("state") != "PROPOSED":
            return
        plan = TaskPlan.from_wire(payload)
        self._set_state(msg.session, plan.id, "PROPOSED")
        self.substrate.tracker.inc()  # hand the activity hold to the thread
        thread = threading.Thread(
            target=self._handle_plan, args=(msg.session, plan),
            name=f"plan-{plan.id}", daemon=True)
        thread.start()

    def _handle_plan(self, session_id: str, plan: TaskPlan) -> None:
        tracker = self.substrate.tracker
        hold = True
        try:
            session = self.sessions.get(session_id)
            mode = session.plan_mode
            if plan.meta.get("replanned_from") or plan.meta.get("revised_from"):
                mode = "INTERACTIVE"  # never auto-run a replanned/revised plan
            if mode != "AUTO":
                tracker.dec()  # waiting on the user is idle time
                hold = False
            outcome, result_plan = self.planner.propose_and_await(
                plan, session_id, mode)
            if outcome == "APPROVED":
                self._set_state(session_id, result_plan.id, "APPROVED")
                if not hold:
                    tracker.inc()
                hold = False  # transferred into execute()
                self.execute(result_plan, session.budget, session_id,
                             carried_hold=True)
            else:
                self._set_state(session_id, plan.id, "ABORTED")
        except Exception:  # noqa: BLE001 - a broken plan must not kill the service
            self._set_state(session_id, plan.id, "ABORTED")
        finally:
            if hold:
                tracker.dec()

    # -- execution ---------------------------------------------------------------

    def execute(self, plan: TaskPlan, budget: Budget, session_id: str,
                carried_hold: bool = False) -> str:
        """Run an APPROVED plan to COMPLETED or ABORTED(reason)."""
        if plan.state != "APPROVED":
            raise ValueError(f"plan {plan.id} is {plan.state}, not APPROVED")
        tracker = self.substrate.tracker
        if not carried_hold:
            tracker.inc()
        holds = 1
        plan.state = "EXECUTING"
        self._set_state(session_id, plan.id, "EXECUTING")
        try:
            budget.projected = self.estimate_task_plan(plan)
        except MissingCostHints:
            budget.projected = None
        run = _PlanRun(plan)
        sinks = self._sink_nodes(plan)
        control_stream = self.substrate.create_stream(
            session_id, "TC", tags=("EXEC",))
        remove_hooks = self._install_hooks(run)
        abort_reason = None
        try:
            while True:
                aborted = self._dispatch_ready(run, budget, session_id,
                                               control_stream, sinks)
                if aborted:
                    abort_reason = plan.abort_reason
                    break
                if self._all_terminal(plan):
                    break
                # release activity while blocked on node outputs
                while holds:
                    tracker.dec()
                    holds -= 1
                event = self._next_event(run)
                holds = 1  # either the event's transferred count or a fresh one
                if event is None:
                    tracker.inc()
                    if not self._handle_stall(run, budget, session_id):
                        abort_reason = "stalled"
                        break
                else:
                    self._apply_event(run, budget, session_id, event)
            return self._finish(plan, session_id, abort_reason)
        finally:
            remove_hooks()
            if not control_stream.closed:
                self.substrate.append(control_stream, MessageKind.EOS)
            while holds:
                tracker.dec()
                holds -= 1

    def _next_event(self, run: _PlanRun):
        try:
            return run.events.get(timeout=0.1)
        except Empty:
            return None

    def _handle_stall(self, run: _PlanRun, budget: Budget,
                      session_id: str) -> bool:
        """No event arrived: time out overdue nodes. False = give up."""
        plan = run.plan
        now = time.monotonic()
        overdue = [node for node in plan.nodes.values()
                   if node.status == "RUNNING"
                   and now - run.dispatched_at.get(node.id, now)
                   > self.node_timeout_s]
        for node in overdue:
            self._fail_node(plan, node, "node timeout", session_id, budget, run)
        return True

    def _dispatch_ready(self, run: _PlanRun, budget: Budget, session_id: str,
                        control_stream, sinks) -> bool:
        """Dispatch every ready PENDING node; True when the plan aborted."""
        plan = run.plan
        for node_id in sorted(plan.nodes):
            node = plan.nodes[node_id]
            if node.status != "PENDING":
                continue
            in_edges = plan.in_edges(node_id)
            if any(plan.nodes[src].status in ("FAILED", "SKIPPED")
                   for src, *_ in in_edges):
                node.status = "SKIPPED"
                continue
            if not all((src, sp) in run.cache for src, sp, *_ in in_edges):
                continue
            try:
                estimate = self._node_estimate(node)
            except MissingCostHints as exc:
                self._fail_node(plan, node, str(exc), session_id, budget, run)
                continue
            verdict, dimension = check_budget(budget, estimate)
            if verdict == "VIOLATION":
                action = self.on_violation(budget.policy, session_id, plan,
                                           dimension, estimate, budget)
                if action != "PROCEED":
                    plan.abort_reason = f"BudgetExceeded:{dimension}"
                    return True
            try:
                inputs = self._bind_inputs(plan, node, run, budget, session_id)
            except Exception as exc:  # noqa: BLE001
                self._fail_node(plan, node, f"binding failed: {exc}",
                                session_id, budget, run)
                continue
            payload = {
                "instruction": "EXECUTE",
                "agent": node.agent_name,
                "plan": plan.id,
                "node": node.id,
                "inputs": inputs,
            }
            if node.id in sinks:
                payload["result_tags"] = ["RESULT"]
            node.status = "RUNNING"
            run.dispatched_at[node.id] = time.monotonic()
            run.dispatch_count += 1
            self.substrate.append(control_stream, MessageKind.CONTROL, payload,
                                  tags=("EXEC",), producer="TC")
            self.registry.record_usage(node.agent_name)
        return False

    def _apply_event(self, run: _PlanRun, budget: Budget, session_id: str,
                     event) -> None:
        plan = run.plan
        if event[0] == "output":
            _kind, node_id, param, value = event
            run.cache[(node_id, param)] = value
            self._maybe_complete(run, budget, session_id, node_id)
        elif event[0] == "done":
            _kind, node_id, error, elapsed_ms = event
            run.invocation_ms[node_id] = elapsed_ms
            node = plan.nodes.get(node_id)
            if node is None or node.status != "RUNNING":
                return
            if error:
                self._fail_node(plan, node, error, session_id, budget, run)
            else:
                self._maybe_complete(run, budget, session_id, node_id,
                                     invocation_finished=True)

    def _maybe_complete(self, run: _PlanRun, budget: Budget, session_id: str,
                        node_id: str, invocation_finished: bool = False) -> None:
        plan = run.plan
        node = plan.nodes.get(node_id)
        if node is None or node.status != "RUNNING":
            return
        needed = {(node_id, src_param)
                  for src, src_param, _dst, _dp, _t in plan.edges()
                  if src == node_id}
        if needed:
            if not all(key in run.cache for key in needed):
                return
        elif not invocation_finished:
            return
        node.status = "DONE"
        self._charge_node(run, budget, session_id, node)

    def _fail_node(self, plan: TaskPlan, node, reason: str, session_id: str,
                   budget: Budget, run: _PlanRun) -> None:
        node.status = "FAILED"
        self.registry.record_usage(node.agent_name, failed=True)
        self._charge_node(run, budget, session_id, node)
        for other_id in self._descendants(plan, node.id):
            other = plan.nodes[other_id]
            if other.status in ("PENDING", "RUNNING"):
                other.status = "SKIPPED"

    def _charge_node(self, run: _PlanRun, budget: Budget, session_id: str,
                     node) -> None:
        try:
            qos = self._node_estimate(node)
        except MissingCostHints:
            qos = QoSVector(0.0, 0.0, 1.0)
        elapsed = run.invocation_ms.get(node.id)
        if elapsed is None:
            started = run.dispatched_at.get(node.id)
            elapsed = (time.monotonic() - started) * 1000.0 if started else 0.0
        budget.charge(cost=qos.cost, latency_ms=elapsed, quality=qos.quality)
        accrued = budget.accrued
        self.substrate.append(
            self.substrate.session_stream(session_id), MessageKind.CONTROL,
            {"instruction": "BUDGET", "node": node.id,
             "charge": {"cost": qos.cost, "latency_ms": elapsed},
             "accrued": {"cost": accrued.cost,
                         "latency_ms": accrued.latency_ms,
                         "quality": accrued.quality},
             "allocated": budget.allocated.to_dict()},
            tags=("BUDGET",), producer="TC")

    def _finish(self, plan: TaskPlan, session_id: str,
                abort_reason: Optional[str]) -> str:
        failed = [n.id for n in plan.nodes.values() if n.status == "FAILED"]
        if abort_reason is None and failed:
            abort_reason = f"NodeFailed:{sorted(failed)[0]}"
        if abort_reason is None and not self._all_done(plan):
            abort_reason = "incomplete"
        session_stream = self.substrate.session_stream(session_id)
        if abort_reason:
            plan.state = "ABORTED"
            plan.abort_reason = abort_reason
            self.substrate.append(
                session_stream, MessageKind.CONTROL,
                {"instruction": "ABORTED", "plan": plan.id,
                 "reason": abort_reason},
                tags=("ABORT",), producer="TC")
        else:
            plan.state = "COMPLETED"
        self.substrate.append(
            session_stream, MessageKind.CONTROL,
            {"instruction": "PLAN_DONE", "plan": plan.id, "state": plan.state,
             "nodes": {n.id: n.status for n in plan.nodes.values()}},
            tags=("SYS",), producer="TC")
        self._set_state(session_id, plan.id, plan.state)
        return plan.state

    # -- input binding -------------------------------------------------------------

    def _bind_inputs(self, plan: TaskPlan, node, run: _PlanRun, budget: Budget,
                     session_id: str) -> dict:
        descriptor = self.registry.get(node.agent_name).descriptor
        inputs = {}
        for param, binding in node.input_bindings.items():
            spec = descriptor.input(param)
            if "edge" in binding:
                src_node, src_param = binding["edge"].split(".", 1)
                value = run.cache[(src_node, src_param)]
                inputs[param] = self.bind_edge(
                    value, spec, session_id, budget,
                    forced=binding.get("needs_transform", False))
            elif "literal" in binding:
                inputs[param] = binding["literal"]
            elif "literal_source" in binding:
                inputs[param] = self._load_source_table(
                    binding["literal_source"], budget)
            elif binding.get("source") == "USER.TEXT":
                inputs[param] = self.bind_edge(
                    plan.origin.get("text", ""), spec, session_id, budget,
                    forced=binding.get("needs_transform", False))
            elif binding.get("source") == "USER.EVENT":
                inputs[param] = self.bind_edge(
                    plan.origin.get("event") or {}, spec, session_id, budget)
        return inputs

    def bind_edge(self, value, to_spec, session_id: str, budget: Budget,
                  forced: bool = False):
        """Identity when types line up; otherwise plan and run a transform."""
        from .agents import value_matches

        if not forced and value_matches(to_spec.semantic_type, value):
            return value
        try:
            dplan = self.data_planner.plan_transform(
                value, to_spec.semantic_type, target_name=to_spec.name)
        except NoFeasiblePlan as exc:
            raise TransformFailed(str(exc)) from exc
        if not dplan.identity:
            self.substrate.append(
                self.substrate.session_stream(session_id), MessageKind.DATA,
                dplan.to_wire(), tags=("DATAPLAN",), producer="TC")
        try:
            result, _sem = self.data_planner.execute(dplan, budget=budget,
                                                     input_value=value)
        except (OperatorFailed, SourceUnavailable) as exc:
            raise TransformFailed(str(exc)) from exc
        return result

    def _load_source_table(self, path: str, budget: Budget) -> dict:
        record = self.data_registry.get(path)
        table_name = record.connection.get("table", record.path.name.lower())
        table = self.store.table(table_name)
        budget.charge(cost=record.cost_hints.per_call_cost, latency_ms=0.0)
        return table.to_payload()

    # -- budget violation handling -----------------------------------------------------

    def on_violation(self, policy: str, session_id: str, plan: TaskPlan,
                     dimension: str, estimate: QoSVector,
                     budget: Budget) -> str:
        """PROCEED only when a CONFIRM request is approved; else ABORT."""
        session_stream = self.substrate.session_stream(session_id)
        if policy == "CONFIRM":
            with self._lock:
                self._confirm_counter += 1
                confirm_id = f"confirm-{session_id}-{self._confirm_counter}"
                waiter = _ConfirmWaiter()
                self._confirm_waiters[(session_id, confirm_id)] = waiter
            accrued = budget.accrued
            self.substrate.append(
                session_stream, MessageKind.CONTROL,
                {"instruction": "BUDGET_CONFIRM", "confirm_id": confirm_id,
                 "plan": plan.id, "dimension": dimension,
                 "estimate": estimate.to_dict(),
                 "accrued": {"cost": accrued.cost,
                             "latency_ms": accrued.latency_ms,
                             "quality": accrued.quality},
                 "allocated": budget.allocated.to_dict()},
                tags=("BUDGET", "CONFIRM"), producer="TC")
            self.substrate.tracker.dec()  # waiting on the user is idle time
            try:
                waiter.event.wait(self.confirm_timeout_s)
            finally:
                self.substrate.tracker.inc()
                with self._lock:
                    self._confirm_waiters.pop((session_id, confirm_id), None)
            if waiter.decision == "approve":
                budget.waive(dimension)
                budget.confirmations.append(
                    {"confirm_id": confirm_id, "dimension": dimension})
                return "PROCEED"
            return "ABORT"
        if policy == "REPLAN":
            self.substrate.append(
                session_stream, MessageKind.CONTROL,
                {"instruction": "REPLAN", "plan": plan.id,
                 "reason": f"BudgetExceeded:{dimension}",
                 "intent": plan.intent, "origin": plan.origin,
                 "generation": int(plan.meta.get("generation", 0))},
                tags=("REPLAN",), producer="TC")
            return "ABORT"
        return "ABORT"

    def _on_decision(self, ref, msg) -> None:
        payload = msg.payload
        if not isinstance(payload, dict):
            return
        if payload.get("instruction") != "BUDGET_DECISION":
            return
        with self._lock:
            waiter = self._confirm_waiters.get(
                (msg.session, payload.get("confirm_id")))
        if waiter is None:
            return
        waiter.decision = payload.get("decision")
        waiter.event.set()

    # -- estimates ----------------------------------------------------------------

    def estimate_task_plan(self, plan: TaskPlan) -> QoSVector:
        edges = [(src, dst) for src, _sp, dst, _dp, _t in plan.edges()]
        return estimate_dag(
            sorted(plan.nodes), edges,
            lambda nid: self._node_cost_or_none(plan.nodes[nid]))

    def _node_cost_or_none(self, node) -> Optional[NodeCost]:
        try:
            record = self.registry.get(node.agent_name)
        except Exception:  # noqa: BLE001
            return None
        qos = record.descriptor.qos
        if qos is None:
            return None
        return NodeCost(qos.cost, qos.latency_ms, qos.quality)

    def _node_estimate(self, node) -> QoSVector:
        cost = self._node_cost_or_none(node)
        if cost is None:
            raise MissingCostHints(node.id)
        return QoSVector(cost.cost, cost.latency_ms, cost.quality)

    # -- bookkeeping helpers ----------------------------------------------------------

    def _install_hooks(self, run: _PlanRun):
        plan_id = run.plan.id
        tracker = self.substrate.tracker

        def on_output(_instance, attribution, param, value, _ref, _seq):
            if attribution and attribution.get("plan") == plan_id:
                tracker.inc()  # custody moves to the event consumer
                run.events.put(("output", attribution.get("node"), param, value))

        def on_done(_instance, invocation):
            attribution = invocation.attribution
            if attribution and attribution.get("plan") == plan_id:
                tracker.inc()
                run.events.put(("done", attribution.get("node"),
                                invocation.error, invocation.elapsed_ms))

        self.host.add_output_listener(on_output)
        self.host.add_invocation_listener(on_done)

        def remove():
            self.host.remove_output_listener(on_output)
            self.host.remove_invocation_listener(on_done)
            while True:  # drop custody of any unconsumed events
                try:
                    run.events.get_nowait()
                except Empty:
                    break
                tracker.dec()

        return remove

    @staticmethod
    def _sink_nodes(plan: TaskPlan) -> set:
        with_out = {src for src, *_ in plan.edges()}
        return {nid for nid in plan.nodes if nid not in with_out}

    @staticmethod
    def _descendants(plan: TaskPlan, node_id: str) -> set:
        children: dict = {}
        for src, _sp, dst, _dp, _t in plan.edges():
            children.setdefault(src, set()).add(dst)
        seen = set()
        frontier = [node_id]
        while frontier:
            current = frontier.pop()
            for nxt in children.get(current, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return seen

    @staticmethod
    def _all_terminal(plan: TaskPlan) -> bool:
        return all(n.status in ("DONE", "FAILED", "SKIPPED")
                   for n in plan.nodes.values())

    @staticmethod
    def _all_done(plan: TaskPlan) -> bool:
        return all(n.status == "DONE" for n in plan.nodes.values())

    # -- state registry (gateway / scenarios) -----------------------------------------

    def _set_state(self, session_id: str, plan_id: str, state: str) -> None:
        with self._lock:
            self._plan_states[(session_id, plan_id)] = state

    def plan_state(self, session_id: str, plan_id: str) -> Optional[str]:
        with self._lock:
            return self._plan_states.get((session_id, plan_id))

    def plans(self, session_id: str) -> dict:
        with self._lock:
            return {plan_id: state
                    for (sid, plan_id), state in self._plan_states.items()
                    if sid == session_id}

    def pending_confirms(self, session_id: str) -> list:
        with self._lock:
            return sorted(confirm_id
                          for sid, confirm_id in self._confirm_waiters
                          if sid == session_id)
