"""Exception types shared across the kernel."""
from __future__ import annotations


class OrchestraError(Exception):
    """Base class for every kernel-raised error."""


# --- stream substrate ---------------------------------------------------
class UnknownSession(OrchestraError):
    pass


class SessionClosed(OrchestraError):
    pass


class StreamClosed(OrchestraError):
    pass


class PayloadTooLarge(OrchestraError):
    pass


class UnknownStream(OrchestraError):
    pass


# --- agent runtime ------------------------------------------------------
class InvalidDescriptor(OrchestraError):
    pass


class UnknownParam(OrchestraError):
    pass


class TypeMismatch(OrchestraError):
    pass


# --- registries ---------------------------------------------------------
class DuplicateName(OrchestraError):
    pass


class UnknownAgent(OrchestraError):
    pass


class DuplicatePath(OrchestraError):
    pass


class OrphanPath(OrchestraError):
    pass


class UnknownPath(OrchestraError):
    pass


# --- sessions -----------------------------------------------------------
class InvalidBudget(OrchestraError):
    pass


class DuplicateScope(OrchestraError):
    pass


class UnknownScope(OrchestraError):
    pass


# --- planners -----------------------------------------------------------
class NoApplicableTemplate(OrchestraError):
    pass


class UnresolvedAgentSlot(OrchestraError):
    """Raised when no registered agent fills a template capability phrase."""

    def __init__(self, capability: str):
        super().__init__(f"no agent matches capability: {capability!r}")
        self.capability = capability


class NoFeasiblePlan(OrchestraError):
    pass


class SourceUnavailable(OrchestraError):
    pass


class OperatorFailed(OrchestraError):
    def __init__(self, node: str, reason: str = ""):
        super().__init__(f"operator {node} failed: {reason}")
        self.node = node
        self.reason = reason


class TransformFailed(OrchestraError):
    pass


# --- optimizer ----------------------------------------------------------
class MissingCostHints(OrchestraError):
    def __init__(self, node: str):
        super().__init__(f"no cost hints for node {node}")
        self.node = node


class AllInfeasible(OrchestraError):
    """No candidate satisfies the constraint set; carries per-candidate violations."""

    def __init__(self, violations: dict):
        super().__init__("all candidate plans violate the constraint set")
        self.violations = violations


# --- coordinator --------------------------------------------------------
class BudgetExceeded(OrchestraError):
    def __init__(self, dimension: str):
        super().__init__(f"budget exceeded on {dimension}")
        self.dimension = dimension


class NodeFailed(OrchestraError):
    def __init__(self, node: str, reason: str = ""):
        super().__init__(f"node {node} failed: {reason}")
        self.node = node
        self.reason = reason


class PlanNotPending(OrchestraError):
    """Decision posted for a plan that is not awaiting one."""


# --- relational store / built-ins ----------------------------------------
class ParseError(OrchestraError):
    pass


class UnknownTable(OrchestraError):
    pass


class NoTemplateMatch(OrchestraError):
    pass


class SchemaMismatch(OrchestraError):
    pass


class UnknownJob(OrchestraError):
    pass


# --- cli / scenarios ------------------------------------------------------
class ConfigError(OrchestraError):
    pass


class ScenarioError(OrchestraError):
    pass
