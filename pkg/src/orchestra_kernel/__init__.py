"""Compound-AI orchestration runtime.

Tagged streams carry all data and control; agents trigger off places in
the PetriNet style; registries describe agents and data sources;
planners produce DAG plans that a budget-aware coordinator executes.
"""
from .agents import (
    AgentDescriptor,
    AgentHost,
    AgentInstance,
    ParamSpec,
    QoSHints,
    TriggerPolicy,
    TriggerState,
)
from .catalog import CostHints, DataRegistry, DataSourceRecord, SourcePath
from .coordinator import Budget, BudgetLimits, TaskCoordinator, check_budget
from .dataplan import DataPlan, DataPlanner, OperatorNode
from .kernel import Kernel
from .llm import HTTPModelBackend, MockLLM
from .optimizer import ConstraintSet, QoSVector, choose, estimate_dag
from .planner import PlanNode, TaskPlan, TaskPlanner
from .registry import AgentRecord, AgentRegistry
from .relstore import RelStore, TableData, load_csv
from .sessions import Session, SessionManager
from .streams import (
    ActivityTracker,
    Message,
    MessageKind,
    StreamRef,
    StreamSubstrate,
    TagFilter,
)

__version__ = "0.1.0"

__all__ = [
    "ActivityTracker", "AgentDescriptor", "AgentHost", "AgentInstance",
    "AgentRecord", "AgentRegistry", "Budget", "BudgetLimits",
    "ConstraintSet", "CostHints", "DataPlan", "DataPlanner", "DataRegistry",
    "DataSourceRecord", "HTTPModelBackend", "Kernel", "Message",
    "MessageKind", "MockLLM", "OperatorNode", "ParamSpec", "PlanNode",
    "QoSHints", "QoSVector", "RelStore", "Session", "SessionManager",
    "SourcePath", "StreamRef", "StreamSubstrate", "TableData", "TagFilter",
    "TaskCoordinator", "TaskPlan", "TaskPlanner", "TriggerPolicy",
    "TriggerState", "check_budget", "choose", "estimate_dag", "load_csv",
]
