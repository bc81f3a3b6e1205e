"""Task planner: template planning, validation, propose/approve."""
import threading

import pytest

from orchestra_kernel.errors import NoApplicableTemplate, UnresolvedAgentSlot
from orchestra_kernel.planner import TaskPlan
from orchestra_kernel.registry import AgentRegistry
from orchestra_kernel.streams import MessageKind

JOB_SEARCH_UTTERANCE = "I am looking for a data scientist position in SF bay area."


def plan_messages(kernel, session_id):
    stream = kernel.substrate.session_stream(session_id)
    return [m.payload for m in kernel.substrate.read(stream)
            if m.kind == MessageKind.DATA and "PLAN" in m.tags]


def test_job_search_plan_matches_reference_shape(seeded_kernel):
    session = seeded_kernel.create_session()
    plan = seeded_kernel.task_planner.plan(JOB_SEARCH_UTTERANCE, "JOB_SEARCH",
                                           session.id)
    agents = {node.id: node.agent_name for node in plan.nodes.values()}
    assert agents == {"profile": "Profiler", "match": "JobMatcher",
                      "present": "Presenter"}
    edges = {(a, b, c, d): t for a, b, c, d, t in plan.edges()}
    assert ("profile", "Profile", "match", "Job Seeker Data") in edges
    assert ("match", "Matches", "present", "Items") in edges
    jobs_binding = plan.nodes["match"].input_bindings["Jobs"]
    assert jobs_binding == {"literal_source": "/hr/HR/Jobs"}
    criteria = plan.nodes["profile"].input_bindings["Criteria"]
    assert criteria["source"] == "USER.TEXT"
    assert criteria["needs_transform"] is True
    # the proposal is emitted to the session stream tagged PLAN
    proposals = plan_messages(seeded_kernel, session.id)
    assert [p["plan_id"] for p in proposals] == [plan.id]
    assert proposals[0]["state"] == "PROPOSED"


def test_smalltalk_single_node_plan(seeded_kernel):
    session = seeded_kernel.create_session()
    plan = seeded_kernel.task_planner.plan("hello", "SMALLTALK", session.id)
    assert len(plan.nodes) == 1
    assert next(iter(plan.nodes.values())).agent_name == "Responder"


def test_unsupported_intent_and_empty_registry(seeded_kernel, kernel):
    session = seeded_kernel.create_session()
    with pytest.raises(NoApplicableTemplate):
        seeded_kernel.task_planner.plan("x", "NOT_AN_INTENT", session.id)
    bare = kernel(seeded=False)
    bare.task_planner.templates = seeded_kernel.task_planner.templates
    bare_session = bare.create_session()
    with pytest.raises(UnresolvedAgentSlot):
        bare.task_planner.plan("x", "JOB_SEARCH", bare_session.id)


def test_slot_filling_is_vector_rank_one(seeded_kernel):
    """Oracle: each filled slot equals the registry's top vector hit."""
    planner = seeded_kernel.task_planner
    plan = planner.build(JOB_SEARCH_UTTERANCE, "JOB_SEARCH")
    for slot in planner.templates["JOB_SEARCH"]["nodes"]:
        expected = seeded_kernel.registry.search_vector(
            slot["capability"], k=1)[0][0].name
        assert plan.nodes[slot["id"]].agent_name == expected


def test_plan_determinism(seeded_kernel):
    planner = seeded_kernel.task_planner
    one = planner.build(JOB_SEARCH_UTTERANCE, "JOB_SEARCH")
    two = planner.build(JOB_SEARCH_UTTERANCE, "JOB_SEARCH")
    assert one.to_wire() == two.to_wire()


def test_validate_detects_cycle(seeded_kernel):
    plan = TaskPlan.from_wire({
        "plan_id": "p", "state": "PROPOSED", "intent": "X", "origin": {},
        "nodes": [
            {"id": "a", "agent": "NL2Q",
             "bindings": {"Question": {"edge": "b.Query"}}},
            {"id": "b", "agent": "NL2Q",
             "bindings": {"Question": {"edge": "a.Query"}}},
        ], "meta": {}})
    violations, _ = seeded_kernel.task_planner.validate(plan)
    assert any(v.code == "CYCLE" for v in violations)


def test_validate_reference_plan_clean_with_transform_warning(seeded_kernel):
    plan = seeded_kernel.task_planner.build(JOB_SEARCH_UTTERANCE, "JOB_SEARCH")
    violations, warnings = seeded_kernel.task_planner.validate(plan)
    assert violations == []
    assert len(warnings) == 1 and "NEEDS_TRANSFORM" in warnings[0]


def test_validate_unbound_and_unknown(seeded_kernel):
    plan = TaskPlan.from_wire({
        "plan_id": "p", "state": "PROPOSED", "intent": "X", "origin": {},
        "nodes": [
            {"id": "a", "agent": "QueryExecutor", "bindings": {}},
            {"id": "b", "agent": "Ghost", "bindings": {}},
            {"id": "c", "agent": "NL2Q",
             "bindings": {"Nope": {"literal": "x"},
                          "Question": {"literal": 42}}},
        ], "meta": {}})
    violations, _ = seeded_kernel.task_planner.validate(plan)
    codes = sorted(v.code for v in violations)
    assert "UNBOUND" in codes          # QueryExecutor.Query unbound
    assert "UNKNOWN_AGENT" in codes    # Ghost
    assert "UNKNOWN_PARAM" in codes    # NL2Q.Nope
    assert "TYPE" in codes             # literal 42 against TEXT


def test_auto_mode_approves_immediately(seeded_kernel):
    session = seeded_kernel.create_session()
    plan = seeded_kernel.task_planner.build("hello", "SMALLTALK")
    outcome, result = seeded_kernel.task_planner.propose_and_await(
        plan, session.id, "AUTO")
    assert outcome == "APPROVED" and result.state == "APPROVED"


def test_interactive_approval_round_trip(seeded_kernel):
    session = seeded_kernel.create_session()
    planner = seeded_kernel.task_planner
    plan = planner.build("hello", "SMALLTALK")
    results = []

    def wait():
        results.append(planner.propose_and_await(plan, session.id,
                                                 "INTERACTIVE",
                                                 timeout_s=5.0))

    thread = threading.Thread(target=wait)
    thread.start()
    deadline = [p for p in range(100)]
    import time
    for _ in deadline:
        if planner.pending_decisions(session.id):
            break
        time.sleep(0.02)
    seeded_kernel.approve_plan(session.id, plan.id, "approve")
    thread.join(timeout=5.0)
    assert results[0][0] == "APPROVED"


def test_interactive_timeout_rejects(seeded_kernel):
    session = seeded_kernel.create_session()
    planner = seeded_kernel.task_planner
    plan = planner.build("hello", "SMALLTALK")
    outcome, result = planner.propose_and_await(plan, session.id,
                                                "INTERACTIVE", timeout_s=0.1)
    assert outcome == "REJECTED"
    assert result.state == "ABORTED"


def test_revision_replaces_agent_and_revalidates(seeded_kernel):
    session = seeded_kernel.create_session()
    planner = seeded_kernel.task_planner
    plan = planner.build("hello", "SMALLTALK")
    revised = planner.apply_revision(
        plan, {"replace_agent": [{"node": "reply", "agent": "Responder"}],
               "set_literal": [{"node": "reply",
                                "param": "Text",
                                "value": "hi"}]})
    assert revised.id.endswith("-r1")
    assert revised.meta["revised_from"] == plan.id
    assert revised.nodes["reply"].input_bindings["Text"] == {"literal": "hi"}
    violations, _ = planner.validate(revised)
    assert violations == []
    with pytest.raises(ValueError):
        planner.apply_revision(plan, {"replace_agent": [
            {"node": "reply", "agent": "DoesNotExist"}]})
