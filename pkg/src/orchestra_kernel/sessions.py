"""Sessions: the scoped context agents collaborate in.

A session owns exactly one session stream (the audit log of
orchestration: entry/exit announcements, stream creation, plan
proposals, budget events), a set of participating instances, a tree of
naming scopes, and a budget.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

from .agents import AgentHost
from .errors import (
    DuplicateScope,
    InvalidBudget,
    SessionClosed,
    UnknownScope,
    UnknownSession,
)
from .registry import AgentRegistry
from .streams import MessageKind, StreamSubstrate


@dataclass
class Session:
    id: str
    state: str = "ACTIVE"  # ACTIVE | CLOSED
    participants: list = field(default_factory=list)
    session_stream: object = None
    scopes: dict = field(default_factory=dict)  # scope name -> full scope id
    budget: object = None
    plan_mode: str = "AUTO"  # AUTO | INTERACTIVE
    constraints: object = None  # ConstraintSet for data-plan selection

    @property
    def active(self) -> bool:
        return self.state == "ACTIVE"


class SessionManager:
    def __init__(self, substrate: StreamSubstrate, host: AgentHost,
                 registry: AgentRegistry, drain_window_s: float = 5.0):
        self.substrate = substrate
        self.host = host
        self.registry = registry
        self.drain_window_s = drain_window_s
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._counter = 0

    def create_session(self, agents=(), budget=None, plan_mode: str = "AUTO",
                       constraints=None) -> Session:
        from .coordinator import Budget
        from .optimizer import ConstraintSet

        if budget is None:
            budget = Budget.unlimited()
        elif isinstance(budget, dict):
            budget = Budget.from_config(budget)
        if (budget.allocated.cost < 0 or budget.allocated.latency_ms < 0
                or not 0.0 <= budget.allocated.min_quality <= 1.0):
            raise InvalidBudget("allocated budget must be nonnegative "
                                "(min_quality within [0, 1])")
        if isinstance(constraints, dict):
            constraints = ConstraintSet.from_config(constraints)
        with self._lock:
            self._counter += 1
            session_id = f"S{self._counter}"
        stream = self.substrate.register_session(session_id)
        session = Session(id=session_id, session_stream=stream, budget=budget,
                          plan_mode=plan_mode, constraints=constraints)
        session.scopes[""] = f"SESSION:{session_id}"
        with self._lock:
            self._sessions[session_id] = session
        for name in agents:
            self.add_agent(session_id, name)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"unknown session: {session_id}")
        return session

    def sessions(self) -> list:
        with self._lock:
            return sorted(self._sessions.values(), key=lambda s: s.id)

    def add_agent(self, session_id: str, agent_name_or_record):
        session = self.get(session_id)
        if not session.active:
            raise SessionClosed(f"session {session_id} is closed")
        if isinstance(agent_name_or_record, str):
            record = self.registry.get(agent_name_or_record)
            descriptor = record.descriptor
        elif hasattr(agent_name_or_record, "descriptor"):
            descriptor = agent_name_or_record.descriptor
        else:
            descriptor = agent_name_or_record
        instance = self.host.instantiate(descriptor, session_id)
        session.participants.append(instance)
        return instance

    def open_scope(self, session_id: str, name: str,
                   parent: str = "") -> str:
        """Child naming scope; nested ids concatenate the parent prefix."""
        session = self.get(session_id)
        if not session.active:
            raise SessionClosed(f"session {session_id} is closed")
        if parent not in session.scopes:
            raise UnknownScope(f"unknown parent scope: {parent!r}")
        key = f"{parent}:{name}" if parent else name
        if key in session.scopes:
            raise DuplicateScope(f"scope already open: {key}")
        scope_id = f"{session.scopes[parent]}:{name}"
        session.scopes[key] = scope_id
        return scope_id

    def scope_id(self, session_id: str, name: str) -> str:
        session = self.get(session_id)
        if name not in session.scopes:
            raise UnknownScope(f"unknown scope: {name!r}")
        return session.scopes[name]

    def close_session(self, session_id: str) -> None:
        """Graceful close: drain in-flight work, then EOS every open stream
        and retire the participants."""
        session = self.get(session_id)
        if not session.active:
            return
        session.state = "CLOSED"
        self.substrate.deactivate_session(session_id)
        self.substrate.tracker.wait_idle(timeout=self.drain_window_s)
        self.host.retire_session(session_id)
        self.substrate.close_session_streams(session_id)

    def budget_for(self, session_id: str):
        try:
            return self.get(session_id).budget
        except UnknownSession:
            return None
