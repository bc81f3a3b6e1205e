"""HTTP gateway: routes, auth, idempotency, event-feed parity."""
import json

import pytest
from fastapi.testclient import TestClient

from orchestra_kernel.gateway import create_app
from orchestra_kernel.transcript import load_jsonl, normalize

TOKEN = "test-token"
AUTH = {"Authorization": f"Bearer {TOKEN}"}


@pytest.fixture
def client(seeded_kernel):
    app = create_app(seeded_kernel, auth_token=TOKEN)
    with TestClient(app) as test_client:
        test_client.kernel = seeded_kernel
        yield test_client


def make_session(client, **overrides):
    body = {"agents": ["AgenticEmployer", "Summarizer"],
            "budget": {"cost": 100, "policy": "ABORT"},
            "plan_mode": "AUTO"}
    body.update(overrides)
    response = client.post("/v1/sessions", json=body, headers=AUTH)
    assert response.status_code == 201
    return response.json()


def test_health(client):
    assert client.get("/v1/health").json() == {"status": "ok"}


def test_mutating_routes_require_token(client):
    assert client.post("/v1/sessions", json={}).status_code == 401
    assert client.post("/v1/sessions", json={},
                       headers={"Authorization": "Bearer wrong"}
                       ).status_code == 401


def test_create_and_view_session(client):
    view = make_session(client)
    assert view["state"] == "ACTIVE"
    assert [p["agent"] for p in view["participants"]] == [
        "AgenticEmployer", "Summarizer"]
    again = client.get(f"/v1/sessions/{view['id']}")
    assert again.status_code == 200
    assert again.json()["id"] == view["id"]
    assert client.get("/v1/sessions/S404").status_code == 404


def test_unknown_session_and_malformed_payloads(client):
    assert client.post("/v1/sessions/S404/utterances",
                       json={"text": "x"}, headers=AUTH).status_code == 404
    view = make_session(client)
    response = client.post(f"/v1/sessions/{view['id']}/utterances",
                           json={"nottext": 1}, headers=AUTH)
    assert response.status_code == 400


def test_utterance_flow_intent_visible_on_feed(client):
    view = make_session(client, agents=["IntentClassifier",
                                        "AgenticEmployer", "NL2Q",
                                        "QueryExecutor", "QuerySummarizer"])
    sid = view["id"]
    response = client.post(
        f"/v1/sessions/{sid}/utterances",
        json={"text": "how many applicants have python skills"},
        headers=AUTH)
    assert response.status_code == 202
    assert "stream" in response.json()
    client.kernel.drain(10)
    with client.stream(
            "GET",
            f"/v1/sessions/{sid}/feed?after=0&timeout_ms=1000") as feed:
        frames = _parse_sse(feed.iter_lines())
    tags = [tag for frame in frames for tag in frame["tags"]]
    assert "INTENT" in tags and "RESULT" in tags


def test_event_feed_matches_read_interval(client):
    view = make_session(client)
    sid = view["id"]
    client.post(f"/v1/sessions/{sid}/events",
                json={"event": {"type": "select", "entity": "job", "id": 7}},
                headers=AUTH)
    client.kernel.drain(10)
    with client.stream(
            "GET", f"/v1/sessions/{sid}/feed?after=0&timeout_ms=800") as feed:
        frames = _parse_sse(feed.iter_lines())
    # parity oracle: every message read() returns appears in the feed
    expected = {(r["stream"], r["seq"])
                for r in client.kernel.transcript(sid)}
    got = {(f["stream"], f["seq"]) for f in frames}
    assert got == expected


def test_feed_resume_after_cursor_loses_nothing(client):
    view = make_session(client)
    sid = view["id"]
    client.post(f"/v1/sessions/{sid}/events",
                json={"event": {"type": "select", "entity": "job", "id": 7}},
                headers=AUTH)
    client.kernel.drain(10)
    with client.stream(
            "GET",
            f"/v1/sessions/{sid}/feed?after=0&max_events=3") as feed:
        first = _parse_sse_with_ids(feed.iter_lines())
    last_id = first[-1][0]
    with client.stream(
            "GET",
            f"/v1/sessions/{sid}/feed?after={last_id}&timeout_ms=800") as feed:
        rest = _parse_sse_with_ids(feed.iter_lines())
    ids = [n for n, _f in first] + [n for n, _f in rest]
    assert ids == sorted(ids)
    assert len(set(ids)) == len(ids)
    assert len(ids) == len(client.kernel.journal(sid))


def test_plan_decision_conflict_on_executed_plan(client):
    view = make_session(client)
    sid = view["id"]
    client.post(f"/v1/sessions/{sid}/events",
                json={"event": {"type": "select", "entity": "job", "id": 7}},
                headers=AUTH)
    client.kernel.drain(10)
    plans = client.get(f"/v1/sessions/{sid}").json()["plans"]
    plan_id = next(iter(plans))
    assert plans[plan_id] == "COMPLETED"
    response = client.post(
        f"/v1/sessions/{sid}/plans/{plan_id}/decision",
        json={"decision": "approve"}, headers=AUTH)
    assert response.status_code == 409


def test_interactive_plan_approval_over_http(client):
    view = make_session(client, plan_mode="INTERACTIVE")
    sid = view["id"]
    client.post(f"/v1/sessions/{sid}/events",
                json={"event": {"type": "select", "entity": "job", "id": 7}},
                headers=AUTH)
    client.kernel.drain(10)
    pending = client.get(f"/v1/sessions/{sid}").json()["pending_decisions"]
    assert len(pending) == 1
    response = client.post(
        f"/v1/sessions/{sid}/plans/{pending[0]}/decision",
        json={"decision": "approve"}, headers=AUTH)
    assert response.status_code == 200
    client.kernel.drain(10)
    plans = client.get(f"/v1/sessions/{sid}").json()["plans"]
    assert plans[pending[0]] == "COMPLETED"


def test_plan_revision_over_http(client):
    view = make_session(client, plan_mode="INTERACTIVE",
                        agents=["IntentClassifier", "AgenticEmployer",
                                "Responder"])
    sid = view["id"]
    client.post(f"/v1/sessions/{sid}/utterances", json={"text": "hello"},
                headers=AUTH)
    client.kernel.drain(10)
    pending = client.get(f"/v1/sessions/{sid}").json()["pending_decisions"]
    response = client.post(
        f"/v1/sessions/{sid}/plans/{pending[0]}/decision",
        json={"decision": "revise",
              "revision": {"set_literal": [
                  {"node": "reply", "param": "Text", "value": "hi"}]}},
        headers=AUTH)
    assert response.status_code == 200
    client.kernel.drain(10)
    revised_pending = client.get(
        f"/v1/sessions/{sid}").json()["pending_decisions"]
    assert revised_pending == [pending[0] + "-r1"]
    client.post(f"/v1/sessions/{sid}/plans/{revised_pending[0]}/decision",
                json={"decision": "approve"}, headers=AUTH)
    client.kernel.drain(10)
    plans = client.get(f"/v1/sessions/{sid}").json()["plans"]
    assert plans[revised_pending[0]] == "COMPLETED"
    assert plans[pending[0]] == "ABORTED"


def test_budget_confirmation_over_http(client):
    view = make_session(client,
                        budget={"cost": 0.5, "policy": "CONFIRM"})
    sid = view["id"]
    client.post(f"/v1/sessions/{sid}/events",
                json={"event": {"type": "select", "entity": "job", "id": 7}},
                headers=AUTH)
    client.kernel.drain(10)
    confirms = client.get(f"/v1/sessions/{sid}").json()["pending_confirms"]
    assert len(confirms) == 1
    response = client.post(
        f"/v1/sessions/{sid}/budget/{confirms[0]}/decision",
        json={"decision": "approve"}, headers=AUTH)
    assert response.status_code == 200
    client.kernel.drain(10)
    budget = client.get(f"/v1/sessions/{sid}").json()["budget"]
    assert budget["accrued"]["cost"] > budget["allocated"]["cost"]
    assert client.post(
        f"/v1/sessions/{sid}/budget/{confirms[0]}/decision",
        json={"decision": "approve"}, headers=AUTH).status_code == 409


def test_idempotent_retries_replay_cached_response(client):
    body = {"agents": [], "plan_mode": "AUTO", "request_id": "req-1"}
    first = client.post("/v1/sessions", json=body, headers=AUTH)
    second = client.post("/v1/sessions", json=body, headers=AUTH)
    assert first.json() == second.json()
    assert len(client.kernel.sessions.sessions()) == 1
    view = make_session(client)
    sid = view["id"]
    utter = {"text": "hello", "request_id": "u-1"}
    one = client.post(f"/v1/sessions/{sid}/utterances", json=utter,
                      headers=AUTH)
    two = client.post(f"/v1/sessions/{sid}/utterances", json=utter,
                      headers=AUTH)
    assert one.json() == two.json()
    utterances = [r for r in client.kernel.transcript(sid)
                  if "UTTERANCE" in r["tags"] and r["kind"] == "DATA"]
    assert len(utterances) == 1


def test_transcript_endpoint_matches_dump(client, tmp_path):
    view = make_session(client)
    sid = view["id"]
    client.post(f"/v1/sessions/{sid}/events",
                json={"event": {"type": "select", "entity": "job", "id": 7}},
                headers=AUTH)
    client.kernel.drain(10)
    client.post(f"/v1/sessions/{sid}/close", headers=AUTH)
    response = client.get(f"/v1/sessions/{sid}/transcript")
    path = tmp_path / "t.jsonl"
    path.write_text(response.text)
    records = load_jsonl(path)
    assert normalize(records) == normalize(client.kernel.transcript(sid))
    kinds = {r["kind"] for r in records}
    assert {"BOS", "EOS"} <= kinds


def test_session_constraints_configurable(client):
    view = make_session(client,
                        constraints={"max_cost": 25, "mode": "weighted",
                                     "weights": [0.5, 0.3, 0.2]})
    assert view["constraints"]["max_cost"] == 25
    assert view["constraints"]["weights"] == [0.5, 0.3, 0.2]
    session = client.kernel.sessions.get(view["id"])
    assert session.constraints.max_cost == 25


def test_registry_browse_endpoints(client):
    agents = client.get("/v1/registry/agents").json()
    assert {"name": "JobMatcher"} in agents
    search = client.get("/v1/registry/agents",
                        params={"q": "match job seeker profile with "
                                     "available job listings"}).json()
    assert search[0]["name"] == "JobMatcher"
    record = client.get("/v1/registry/agents/JobMatcher").json()
    assert record["descriptor"]["name"] == "JobMatcher"
    assert client.get("/v1/registry/agents/Nope").status_code == 404
    sources = client.get("/v1/catalog/sources",
                         params={"q": "job postings with titles and cities",
                                 "k": 1}).json()
    assert sources[0]["path"] == "/hr/HR/Jobs"
    source = client.get("/v1/catalog/sources/hr/HR/Jobs").json()
    assert source["connection"]["credentials_ref"] == "hr-readonly"
    assert client.get("/v1/catalog/sources/nope").status_code == 404


def _parse_sse(lines):
    return [frame for _n, frame in _parse_sse_with_ids(lines)]


def _parse_sse_with_ids(lines):
    frames = []
    current_id = None
    for line in lines:
        if line.startswith("id: "):
            current_id = int(line[4:])
        elif line.startswith("data: "):
            frames.append((current_id, json.loads(line[6:])))
    return frames
