"""Scripted scenario runner.

A scenario is an ordered list of steps ``{actor, action, payload,
expect, forbid?}`` driven against an in-process kernel. After each step
the runner drains the runtime, then checks that the expected tags appear
in arrival order (as a subsequence) among the newly observed messages,
and that no forbidden tag appeared.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ScenarioError
from .kernel import Kernel


@dataclass
class StepReport:
    index: int
    action: str
    observed_tags: list = field(default_factory=list)


def run_scenario(kernel: Kernel, scenario: dict,
                 step_timeout: float = 10.0) -> tuple:
    """Execute the scenario; returns (session_id, transcript records).

    Raises ScenarioError naming the first unmet expectation.
    """
    config = scenario.get("session", {})
    session = kernel.create_session(agents=config.get("agents", ()),
                                    budget=config.get("budget"),
                                    plan_mode=config.get("plan_mode", "AUTO"))
    cursor = 0
    for index, step in enumerate(scenario.get("steps", ()), start=1):
        action = step.get("action")
        payload = step.get("payload")
        if action == "utterance":
            kernel.post_utterance(session.id, payload)
        elif action == "event":
            kernel.post_event(session.id, payload)
        elif action == "approve_plan":
            kernel.approve_plan(session.id, payload.get("plan"),
                                payload.get("decision", "approve"),
                                revision=payload.get("revision"))
        elif action == "confirm_budget":
            kernel.confirm_budget(session.id, payload.get("confirm_id"),
                                  payload.get("decision", "approve"))
        elif action == "wait":
            pass
        else:
            raise ScenarioError(f"step {index}: unknown action {action!r}")
        if not kernel.drain(timeout=float(step.get("timeout", step_timeout))):
            raise ScenarioError(f"step {index} ({action}): runtime did not "
                                "quiesce")
        entries = kernel.journal(session.id, after=cursor)
        if entries:
            cursor = entries[-1][0]
        arrivals = [set(record["tags"]) for _n, record in entries]
        _check_expectations(index, action, step, arrivals)
    kernel.close_session(session.id)
    kernel.drain(timeout=step_timeout)
    return session.id, kernel.transcript(session.id)


def _check_expectations(index: int, action: str, step: dict,
                        arrivals: list) -> None:
    position = 0
    for tag in step.get("expect", ()):
        found = None
        for offset in range(position, len(arrivals)):
            if tag in arrivals[offset]:
                found = offset
                break
        if found is None:
            seen = sorted({t for tags in arrivals for t in tags})
            raise ScenarioError(
                f"step {index} ({action}): expected tag {tag!r} not observed "
                f"in order; saw {seen}")
        position = found + 1
    for tag in step.get("forbid", ()):
        if any(tag in tags for tags in arrivals):
            raise ScenarioError(
                f"step {index} ({action}): forbidden tag {tag!r} observed")
