"""Session lifecycle, scopes, announcements."""
import pytest

from orchestra_kernel.errors import (
    DuplicateScope,
    InvalidBudget,
    SessionClosed,
    UnknownAgent,
    UnknownScope,
)
from orchestra_kernel.streams import MessageKind


def session_controls(kernel, session_id):
    stream = kernel.substrate.session_stream(session_id)
    return [m.payload for m in kernel.substrate.read(stream)
            if m.kind == MessageKind.CONTROL]


def test_empty_session_has_only_session_stream(kernel):
    k = kernel(seeded=False)
    session = k.create_session()
    streams = k.substrate.streams(session.id)
    assert [r.id for r in streams] == [f"SESSION:{session.id}:AGENT:SESSION:0"]
    assert session.state == "ACTIVE"


def test_negative_budget_rejected(kernel):
    k = kernel(seeded=False)
    with pytest.raises(InvalidBudget):
        k.create_session(budget={"cost": -1})


def test_configured_agents_instantiated_and_announced(seeded_kernel):
    session = seeded_kernel.create_session(agents=["IntentClassifier"])
    enters = [p for p in session_controls(seeded_kernel, session.id)
              if p.get("instruction") == "AGENT_ENTER"]
    assert [p["agent"] for p in enters] == ["IntentClassifier"]
    # the configured classifier reacts to user streams automatically
    seeded_kernel.post_utterance(session.id, "hello there")
    assert seeded_kernel.drain(10)
    intents = [m for ref in seeded_kernel.substrate.streams(session.id)
               for m in seeded_kernel.substrate.read(ref)
               if "INTENT" in m.tags and m.kind == MessageKind.DATA]
    assert intents and intents[0].payload["intent"] == "SMALLTALK"


def test_add_agent_errors(seeded_kernel):
    session = seeded_kernel.create_session()
    with pytest.raises(UnknownAgent):
        seeded_kernel.sessions.add_agent(session.id, "NotAnAgent")
    seeded_kernel.close_session(session.id)
    with pytest.raises(SessionClosed):
        seeded_kernel.sessions.add_agent(session.id, "Profiler")


def test_entry_precedes_first_emission(seeded_kernel):
    session = seeded_kernel.create_session(agents=["IntentClassifier"])
    seeded_kernel.post_utterance(session.id, "how many applicants")
    assert seeded_kernel.drain(10)
    stream = seeded_kernel.substrate.session_stream(session.id)
    messages = seeded_kernel.substrate.read(stream)
    enter_seq = next(m.seq for m in messages
                     if m.kind == MessageKind.CONTROL
                     and m.payload.get("instruction") == "AGENT_ENTER")
    created = [m.seq for m in messages
               if m.kind == MessageKind.CONTROL
               and m.payload.get("instruction") == "STREAM_CREATED"
               and m.payload.get("producer") == "IntentClassifier"]
    assert created and all(enter_seq < seq for seq in created)


def test_scopes_nest_and_prefix_streams(kernel):
    k = kernel(seeded=False)
    session = k.create_session()
    scope = k.sessions.open_scope(session.id, "Profile")
    assert scope == f"SESSION:{session.id}:Profile"
    nested = k.sessions.open_scope(session.id, "Step1", parent="Profile")
    assert nested == f"SESSION:{session.id}:Profile:Step1"
    with pytest.raises(DuplicateScope):
        k.sessions.open_scope(session.id, "Profile")
    with pytest.raises(UnknownScope):
        k.sessions.open_scope(session.id, "X", parent="Nope")
    ref = k.substrate.create_stream(session.id, "USER", scope=scope)
    assert ref.id.startswith(f"SESSION:{session.id}:Profile:AGENT:USER:")


def test_close_session_seals_streams_and_retires(seeded_kernel):
    session = seeded_kernel.create_session(agents=["IntentClassifier"])
    seeded_kernel.post_utterance(session.id, "hello")
    assert seeded_kernel.drain(10)
    seeded_kernel.close_session(session.id)
    for ref in seeded_kernel.substrate.streams(session.id):
        assert ref.closed
    exits = [p for p in session_controls(seeded_kernel, session.id)
             if p.get("instruction") == "AGENT_EXIT"]
    assert len(exits) == 1
    assert session.participants[0].retired
