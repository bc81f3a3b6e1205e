"""Kernel: wires the substrate, registries, runtime, planners, and
coordinator into one in-process deployment, and exposes the operations
the gateway, CLI, and scenario runner drive."""
from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from .agents import AgentHost
from .catalog import DataRegistry
from .coordinator import TaskCoordinator
from .dataplan import DataPlanner, GraphSource
from .errors import ConfigError, PlanNotPending, UnknownSession
from .llm import HTTPModelBackend, MockLLM, SourceUnavailable
from .planner import TaskPlanner
from .registry import AgentRegistry
from .relstore import RelStore, load_csv
from .seedio import read_structured
from .sessions import SessionManager
from .streams import (
    ActivityTracker,
    MessageKind,
    StreamSubstrate,
    TagFilter,
    message_record,
)


class Kernel:
    def __init__(self, config: Optional[dict] = None):
        self.config = dict(config or {})
        self.tracker = ActivityTracker()
        self.substrate = StreamSubstrate(
            data_dir=self.config.get("data_dir"),
            payload_cap=int(self.config.get("payload_cap", 1 << 20)),
            tracker=self.tracker)
        self.registry = AgentRegistry(path=self.config.get("registry_path"))
        self.data_registry = DataRegistry()
        self.store = RelStore()
        self.mock_llm: Optional[MockLLM] = None
        self.regions: dict = {}
        self.taxonomy: Optional[GraphSource] = None
        self.host = AgentHost(self.substrate)
        self.host.kernel = self
        self.sessions = SessionManager(
            self.substrate, self.host, self.registry,
            drain_window_s=float(self.config.get("drain_window_s", 5.0)))
        self.host.set_budget_resolver(self.sessions.budget_for)
        self.task_planner = TaskPlanner(
            self.registry, self.substrate, templates=[],
            decision_timeout_s=float(self.config.get("decision_timeout_s",
                                                     120.0)))
        self.data_planner = DataPlanner(
            self.data_registry, self.store,
            backend_resolver=self._resolve_backend,
            data_dir=self.config.get("seed_data_dir"))
        self.coordinator = TaskCoordinator(
            self.substrate, self.registry, self.sessions, self.task_planner,
            self.data_planner, data_registry=self.data_registry,
            store=self.store,
            node_timeout_s=float(self.config.get("node_timeout_s", 30.0)),
            confirm_timeout_s=float(self.config.get("confirm_timeout_s",
                                                    120.0)))
        self.coordinator.host = self.host
        self.task_planner.start_service()
        self.coordinator.start_service()
        self._journals: dict = {}
        self._journal_cond = threading.Condition()
        self._closed = False

    # -- seeding -----------------------------------------------------------

    def seed(self, agents_file=None, catalog_file=None, data_dir=None,
             templates_file=None, mockllm_file=None) -> dict:
        """Load registries, catalog, relational data, templates, scripts.
        Missing CSVs raise ConfigError naming the file."""
        counts = {}
        if catalog_file:
            counts["sources"] = self.data_registry.load_file(catalog_file)
        if data_dir:
            data_path = Path(data_dir)
            self.data_planner.data_dir = data_path
            rows = 0
            tables = 0
            for record in self.data_registry.records():
                connection = record.connection
                if connection.get("driver") != "csv":
                    continue
                locator = data_path / connection["locator"]
                if not locator.exists():
                    raise ConfigError(f"missing file: {locator}")
                table = load_csv(locator, connection.get(
                    "table", record.path.name.lower()))
                self.store.attach(table)
                tables += 1
                rows += len(table.rows)
            counts["tables"] = tables
            counts["rows"] = rows
            regions_file = data_path / "regions.json"
            if regions_file.exists():
                self.regions = {k.lower(): v for k, v in read_structured(
                    regions_file).items()}
            graph_file = data_path / "titles_graph.json"
            if graph_file.exists():
                self.taxonomy = GraphSource(read_structured(graph_file))
            self.data_registry.build_value_index(self.store)
        if agents_file:
            counts["agents"] = self.registry.load_file(agents_file)
        if templates_file:
            templates = read_structured(templates_file)
            self.task_planner.templates = {t["intent"]: t for t in templates}
            counts["templates"] = len(templates)
        if mockllm_file:
            self.mock_llm = MockLLM.from_config(read_structured(mockllm_file))
            counts["script_entries"] = len(self.mock_llm.entries)
        return counts

    def seed_tree(self, seed_dir) -> dict:
        """Seed from a generated tree (agents.yaml, catalog.yaml, ...)."""
        seed_path = Path(seed_dir)
        return self.seed(agents_file=seed_path / "agents.yaml",
                         catalog_file=seed_path / "catalog.yaml",
                         data_dir=seed_path / "data",
                         templates_file=seed_path / "templates.yaml",
                         mockllm_file=seed_path / "mockllm.yaml")

    # -- model backends -------------------------------------------------------

    def _resolve_backend(self, record):
        override = self.config.get("model_backend") or {}
        if override.get("kind") == "http":
            return HTTPModelBackend(override["url"])
        driver = record.connection.get("driver", "mock")
        if driver == "http":
            return HTTPModelBackend(record.connection.get("locator", ""))
        if self.mock_llm is None:
            raise SourceUnavailable(
                f"model source {record.path} has no live backend and no mock "
                "script is loaded")
        return self.mock_llm

    def default_model_backend(self):
        override = self.config.get("model_backend") or {}
        if override.get("kind") == "http":
            return HTTPModelBackend(override["url"])
        if self.mock_llm is None:
            raise SourceUnavailable("no mock LLM script loaded")
        return self.mock_llm

    # -- session operations ------------------------------------------------------

    def create_session(self, agents=(), budget=None, plan_mode="AUTO",
                       constraints=None):
        session = self.sessions.create_session(budget=budget,
                                               plan_mode=plan_mode,
                                               constraints=constraints)
        # journal first so the feed covers the session from birth
        self._attach_journal(session.id)
        for name in agents:
            self.sessions.add_agent(session.id, name)
        return session

    def _attach_journal(self, session_id: str) -> None:
        entries: list = []
        # backfill whatever was appended during session registration; nothing
        # else can write yet, so dump-then-subscribe cannot drop messages
        for record in self.substrate.dump_session(session_id):
            entries.append((len(entries) + 1, record))

        def observer(ref, msg):
            record = message_record(ref.id, msg)
            with self._journal_cond:
                entries.append((len(entries) + 1, record))
                self._journal_cond.notify_all()

        sub = self.substrate.subscribe(
            TagFilter.of(session_scope=session_id), callback=observer,
            name=f"journal-{session_id}")
        with self._journal_cond:
            self._journals[session_id] = (entries, sub)

    def journal(self, session_id: str, after: int = 0) -> list:
        with self._journal_cond:
            journal = self._journals.get(session_id)
            if journal is None:
                raise UnknownSession(f"unknown session: {session_id}")
            entries, _sub = journal
            return [item for item in entries if item[0] > after]

    def wait_journal(self, session_id: str, after: int,
                     timeout: float) -> list:
        """Entries after the cursor, blocking up to timeout for the first."""
        import time as _time
        deadline = _time.monotonic() + timeout
        with self._journal_cond:
            while True:
                journal = self._journals.get(session_id)
                if journal is None:
                    raise UnknownSession(f"unknown session: {session_id}")
                entries, _sub = journal
                fresh = [item for item in entries if item[0] > after]
                if fresh:
                    return fresh
                remaining = deadline - _time.monotonic()
                if remaining <= 0:
                    return []
                self._journal_cond.wait(remaining)

    def post_utterance(self, session_id: str, text: str):
        """Append the utterance to the session's user stream (created on
        first use)."""
        session = self.sessions.get(session_id)
        stream = getattr(session, "user_stream", None)
        if stream is None or stream.closed:
            stream = self.substrate.create_stream(session_id, "USER",
                                                  tags=("UTTERANCE",))
            session.user_stream = stream
        seq = self.substrate.append(stream, MessageKind.DATA, text,
                                    tags=("UTTERANCE",), producer="USER")
        return stream, seq

    def post_event(self, session_id: str, event: dict):
        session = self.sessions.get(session_id)
        stream = getattr(session, "event_stream", None)
        if stream is None or stream.closed:
            stream = self.substrate.create_stream(session_id, "UI",
                                                  tags=("EVENT",))
            session.event_stream = stream
        seq = self.substrate.append(stream, MessageKind.DATA, event,
                                    tags=("EVENT",), producer="UI")
        return stream, seq

    def approve_plan(self, session_id: str, plan_id: Optional[str],
                     decision: str, revision: Optional[dict] = None) -> str:
        pending = self.task_planner.pending_decisions(session_id)
        if plan_id is None:
            if not pending:
                raise PlanNotPending("no plan awaiting a decision")
            plan_id = pending[-1]
        elif plan_id not in pending:
            state = self.coordinator.plan_state(session_id, plan_id)
            raise PlanNotPending(
                f"plan {plan_id} is not awaiting a decision "
                f"(state: {state or 'unknown'})")
        payload = {"instruction": "PLAN_DECISION", "plan": plan_id,
                   "decision": decision}
        if revision is not None:
            payload["revision"] = revision
        self.substrate.append(self.substrate.session_stream(session_id),
                              MessageKind.CONTROL, payload,
                              tags=("DECISION",), producer="USER")
        return plan_id

    def confirm_budget(self, session_id: str, confirm_id: Optional[str],
                       decision: str) -> str:
        pending = self.coordinator.pending_confirms(session_id)
        if confirm_id is None:
            if not pending:
                raise PlanNotPending("no budget confirmation pending")
            confirm_id = pending[-1]
        elif confirm_id not in pending:
            raise PlanNotPending(f"confirmation {confirm_id} is not pending")
        self.substrate.append(self.substrate.session_stream(session_id),
                              MessageKind.CONTROL,
                              {"instruction": "BUDGET_DECISION",
                               "confirm_id": confirm_id,
                               "decision": decision},
                              tags=("DECISION",), producer="USER")
        return confirm_id

    def close_session(self, session_id: str) -> None:
        self.sessions.close_session(session_id)

    # -- observability --------------------------------------------------------------

    def drain(self, timeout: float = 10.0) -> bool:
        return self.tracker.wait_idle(timeout=timeout)

    def transcript(self, session_id: str) -> list:
        return self.substrate.dump_session(session_id)

    def session_view(self, session_id: str) -> dict:
        session = self.sessions.get(session_id)
        streams = self.substrate.streams(session_id)
        return {
            "id": session.id,
            "state": session.state,
            "plan_mode": session.plan_mode,
            "participants": [
                {"agent": inst.descriptor.name, "instance": inst.id}
                for inst in session.participants],
            "open_streams": [ref.id for ref in streams if not ref.closed],
            "plans": self.coordinator.plans(session_id),
            "pending_decisions": self.task_planner.pending_decisions(session_id),
            "pending_confirms": self.coordinator.pending_confirms(session_id),
            "budget": session.budget.snapshot() if session.budget else None,
            "constraints": (session.constraints.to_dict()
                            if session.constraints else None),
        }

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self.task_planner.stop_service()
        self.coordinator.stop_service()
        self.host.close()
        with self._journal_cond:
            journals = list(self._journals.values())
            self._journals.clear()
        for _entries, sub in journals:
            self.substrate.unsubscribe(sub)
        self.substrate.close()
