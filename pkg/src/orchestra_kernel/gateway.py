"""HTTP gateway: sessions, streams, registries, plans, and budgets over
REST plus a server-sent event feed.

All routes live under /v1. Mutating routes require ``Authorization:
Bearer <token>`` and accept an optional client ``request_id`` for
idempotent retries (the cached response is replayed). Malformed bodies
return 400; unknown sessions/streams 404; decisions against plans or
confirmations that are not pending return 409.

Event-feed frames::

    id: <n>
    event: message
    data: {"stream": ..., "seq": ..., "kind": ..., "tags": [...], ...}

Resume with ``?after=<last id>``; ``max_events`` and ``timeout_ms`` bound
the stream for polling clients and tests.
"""
from __future__ import annotations

import json
import threading
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from .errors import (
    OrchestraError,
    PlanNotPending,
    UnknownAgent,
    UnknownPath,
    UnknownSession,
)
from .kernel import Kernel
from .transcript import dump_lines

DEFAULT_TOKEN = "dev-token"


class SessionCreate(BaseModel):
    agents: list = []
    budget: Optional[dict] = None
    plan_mode: str = "AUTO"
    constraints: Optional[dict] = None
    request_id: Optional[str] = None


class UtterancePost(BaseModel):
    text: str
    request_id: Optional[str] = None


class EventPost(BaseModel):
    event: dict
    request_id: Optional[str] = None


class PlanDecision(BaseModel):
    decision: str  # approve | reject | revise
    revision: Optional[dict] = None
    request_id: Optional[str] = None


class BudgetDecision(BaseModel):
    decision: str  # approve | deny
    request_id: Optional[str] = None


def create_app(kernel: Kernel, auth_token: str = DEFAULT_TOKEN) -> FastAPI:
    app = FastAPI(title="orchestra-kernel gateway", version="1")
    idempotency_cache: dict = {}
    cache_lock = threading.Lock()

    def require_auth(authorization: Optional[str] = Header(default=None)):
        if authorization != f"Bearer {auth_token}":
            raise HTTPException(status_code=401, detail="missing or bad token")

    def idempotent(request_id: Optional[str], route: str, compute):
        if request_id:
            key = (route, request_id)
            with cache_lock:
                cached = idempotency_cache.get(key)
            if cached is not None:
                return JSONResponse(cached[1], status_code=cached[0])
        status, body = compute()
        if request_id:
            with cache_lock:
                idempotency_cache[(route, request_id)] = (status, body)
        return JSONResponse(body, status_code=status)

    @app.exception_handler(RequestValidationError)
    async def malformed(_request: Request, exc: RequestValidationError):
        return JSONResponse({"detail": "malformed payload",
                             "errors": exc.errors()}, status_code=400)

    @app.exception_handler(OrchestraError)
    async def domain_error(_request: Request, exc: OrchestraError):
        if isinstance(exc, (UnknownSession, UnknownAgent, UnknownPath)):
            status = 404
        elif isinstance(exc, PlanNotPending):
            status = 409
        else:
            status = 400
        return JSONResponse({"detail": str(exc)}, status_code=status)

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    # -- sessions ---------------------------------------------------------

    @app.post("/v1/sessions", dependencies=[Depends(require_auth)],
              status_code=201)
    def create_session(body: SessionCreate):
        def compute():
            session = kernel.create_session(agents=body.agents,
                                            budget=body.budget,
                                            plan_mode=body.plan_mode,
                                            constraints=body.constraints)
            kernel.drain(timeout=5.0)
            return 201, kernel.session_view(session.id)
        return idempotent(body.request_id, "create_session", compute)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        return kernel.session_view(session_id)

    @app.post("/v1/sessions/{session_id}/close",
              dependencies=[Depends(require_auth)])
    def close_session(session_id: str):
        kernel.sessions.get(session_id)
        kernel.close_session(session_id)
        return kernel.session_view(session_id)

    @app.post("/v1/sessions/{session_id}/utterances", status_code=202,
              dependencies=[Depends(require_auth)])
    def post_utterance(session_id: str, body: UtterancePost):
        def compute():
            stream, seq = kernel.post_utterance(session_id, body.text)
            return 202, {"stream": stream.id, "seq": seq}
        return idempotent(body.request_id, f"utterance:{session_id}", compute)

    @app.post("/v1/sessions/{session_id}/events", status_code=202,
              dependencies=[Depends(require_auth)])
    def post_event(session_id: str, body: EventPost):
        def compute():
            stream, seq = kernel.post_event(session_id, body.event)
            return 202, {"stream": stream.id, "seq": seq}
        return idempotent(body.request_id, f"event:{session_id}", compute)

    # -- plans / budget ------------------------------------------------------

    @app.post("/v1/sessions/{session_id}/plans/{plan_id}/decision",
              dependencies=[Depends(require_auth)])
    def plan_decision(session_id: str, plan_id: str, body: PlanDecision):
        kernel.sessions.get(session_id)

        def compute():
            resolved = kernel.approve_plan(session_id, plan_id, body.decision,
                                           revision=body.revision)
            return 200, {"plan": resolved, "decision": body.decision}
        return idempotent(body.request_id,
                          f"plan:{session_id}:{plan_id}", compute)

    @app.post("/v1/sessions/{session_id}/budget/{confirm_id}/decision",
              dependencies=[Depends(require_auth)])
    def budget_decision(session_id: str, confirm_id: str,
                        body: BudgetDecision):
        kernel.sessions.get(session_id)

        def compute():
            resolved = kernel.confirm_budget(session_id, confirm_id,
                                             body.decision)
            return 200, {"confirm_id": resolved, "decision": body.decision}
        return idempotent(body.request_id,
                          f"budget:{session_id}:{confirm_id}", compute)

    # -- transcripts / feed ------------------------------------------------------

    @app.get("/v1/sessions/{session_id}/transcript")
    def transcript(session_id: str):
        records = kernel.transcript(session_id)
        return PlainTextResponse(dump_lines(records),
                                 media_type="application/jsonl")

    @app.get("/v1/sessions/{session_id}/feed")
    def feed(session_id: str, after: int = 0,
             max_events: Optional[int] = None,
             timeout_ms: Optional[int] = None):
        kernel.journal(session_id)  # 404 on unknown session

        def frames():
            import time as _time
            cursor = after
            sent = 0
            deadline = (_time.monotonic() + timeout_ms / 1000.0
                        if timeout_ms else None)
            while True:
                wait = 0.5
                if deadline is not None:
                    wait = min(wait, max(0.0, deadline - _time.monotonic()))
                entries = kernel.wait_journal(session_id, cursor, wait)
                for n, record in entries:
                    cursor = n
                    sent += 1
                    data = json.dumps(record, ensure_ascii=False)
                    yield f"id: {n}\nevent: message\ndata: {data}\n\n"
                    if max_events is not None and sent >= max_events:
                        return
                if not entries:
                    yield ": keep-alive\n\n"
                if deadline is not None and _time.monotonic() >= deadline:
                    return

        return StreamingResponse(frames(), media_type="text/event-stream")

    # -- registries ---------------------------------------------------------------

    @app.get("/v1/registry/agents")
    def browse_agents(q: Optional[str] = None, k: int = 10,
                      mode: str = "vector"):
        if q:
            if mode == "keyword":
                records = kernel.registry.search_keyword(q, k=k)
                return [{"name": r.name, "score": None} for r in records]
            hits = kernel.registry.search_vector(q, k=k)
            return [{"name": r.name, "score": score} for r, score in hits]
        return [{"name": name} for name in kernel.registry.names()]

    @app.get("/v1/registry/agents/{name}")
    def get_agent(name: str):
        record = kernel.registry.get(name)
        view = record.to_dict()
        view.pop("created", None)
        view.pop("updated", None)
        return view

    @app.get("/v1/catalog/sources")
    def browse_sources(q: Optional[str] = None,
                       modality: Optional[str] = None, k: int = 10):
        if q:
            hits = kernel.data_registry.discover(q, modality, k=k)
            return [{"path": str(r.path), "modality": r.modality,
                     "score": score} for r, score in hits]
        return [{"path": str(r.path), "modality": r.modality}
                for r in kernel.data_registry.records()]

    @app.get("/v1/catalog/sources/{path:path}")
    def get_source(path: str):
        record = kernel.data_registry.get("/" + path.strip("/"))
        return record.to_dict()

    return app
