"""Data planner: operator DAGs over heterogeneous sources.

Decomposes retrieval/transformation requests into plans of relational,
graph, text, and model-call operators; grounds query phrases against the
catalog's sampled value index to decide which parts a model or taxonomy
source must answer; executes plans in topological order.

Wire format (tag DATAPLAN): ``{"plan_id", "sink", "nodes": [{"id",
"op_kind", "source", "params", "inputs"}], "substitutions", "expansions"}``.
Operator roles: SELECT/PROJECT/JOIN take TABLE data inputs, SELECT may
additionally take one TEXT input in the ``query_from`` role; EXTRACT and
MODEL_CALL take at most one TEXT input; Q2NL carries its one structured
input literally in ``params["fragment"]``.
"""
from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import grammar
from .catalog import DataRegistry, DataSourceRecord
from .errors import (
    NoFeasiblePlan,
    OperatorFailed,
    SourceUnavailable,
    TransformFailed,
    UnknownPath,
)
from .llm import ModelBackend
from .optimizer import NodeCost, QoSVector, estimate_dag
from .relstore import RelStore, TableData

OP_KINDS = ("DISCOVER", "SELECT", "PROJECT", "JOIN", "EXTRACT", "SUMMARIZE",
            "Q2NL", "NL2Q", "MODEL_CALL")

_TABLE_OPS = {"DISCOVER", "SELECT", "PROJECT", "JOIN"}


@dataclass
class OperatorNode:
    id: str
    op_kind: str
    source: Optional[str] = None
    params: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"id": self.id, "op_kind": self.op_kind, "source": self.source,
                "params": self.params, "inputs": list(self.inputs)}

    @staticmethod
    def from_dict(data: dict) -> "OperatorNode":
        return OperatorNode(id=data["id"], op_kind=data["op_kind"],
                            source=data.get("source"),
                            params=dict(data.get("params", {})),
                            inputs=list(data.get("inputs", ())))


def node_output_type(node: OperatorNode) -> str:
    if node.op_kind in _TABLE_OPS:
        return "TABLE"
    if node.op_kind == "MODEL_CALL" and node.params.get("parse") == "list":
        return "TABLE"
    return "TEXT"


@dataclass
class DataPlan:
    id: str
    nodes: dict = field(default_factory=dict)   # id -> OperatorNode
    sink: Optional[str] = None
    estimated: Optional[QoSVector] = None
    binding: dict = field(default_factory=dict)
    substitutions: list = field(default_factory=list)
    expansions: list = field(default_factory=list)

    @property
    def identity(self) -> bool:
        return not self.nodes

    def edges(self) -> list:
        return [(src, node.id) for node in self.nodes.values()
                for src in node.inputs]

    def to_wire(self) -> dict:
        return {
            "plan_id": self.id,
            "sink": self.sink,
            "nodes": [self.nodes[k].to_dict() for k in sorted(self.nodes)],
            "substitutions": list(self.substitutions),
            "expansions": list(self.expansions),
        }

    @staticmethod
    def from_wire(data: dict) -> "DataPlan":
        nodes = {n["id"]: OperatorNode.from_dict(n) for n in data["nodes"]}
        return DataPlan(id=data["plan_id"], nodes=nodes, sink=data.get("sink"),
                        substitutions=list(data.get("substitutions", ())),
                        expansions=list(data.get("expansions", ())))


def _plan_id(payload) -> str:
    digest = hashlib.sha1(
        json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()
    return f"dp-{digest[:10]}"


def validate_plan(plan: DataPlan) -> list:
    """Structural violations (empty when the plan is well-formed)."""
    problems = []
    if plan.identity:
        return problems
    ids = set(plan.nodes)
    if plan.sink not in ids:
        problems.append("SINK: sink node missing")
    consumed = {src for node in plan.nodes.values() for src in node.inputs}
    sinks = ids - consumed
    if len(sinks) != 1:
        problems.append(f"SINK: expected a single sink, found {sorted(sinks)}")
    try:
        estimate_dag(sorted(ids), plan.edges(),
                     lambda _n: NodeCost(0.0, 0.0))
    except ValueError:
        problems.append("CYCLE: operator graph is cyclic")
        return problems
    for node in plan.nodes.values():
        if node.op_kind not in OP_KINDS:
            problems.append(f"OP: unknown kind {node.op_kind} at {node.id}")
            continue
        for src in node.inputs:
            if src not in ids:
                problems.append(f"EDGE: {node.id} reads missing node {src}")
        upstream = [plan.nodes[s] for s in node.inputs if s in ids]
        if node.op_kind in ("SELECT", "PROJECT", "JOIN"):
            query_from = node.params.get("query_from")
            for dep in upstream:
                if dep.id == query_from:
                    if node_output_type(dep) != "TEXT":
                        problems.append(
                            f"TYPE: {node.id} query role needs TEXT from {dep.id}")
                elif node_output_type(dep) != "TABLE":
                    problems.append(
                        f"TYPE: {node.id} needs TABLE input, {dep.id} is "
                        f"{node_output_type(dep)}")
            if node.op_kind == "JOIN" and len(node.inputs) != 2:
                problems.append(f"JOIN: {node.id} needs exactly two inputs")
        if node.op_kind == "Q2NL":
            if upstream:
                problems.append(f"Q2NL: {node.id} must carry its fragment literally")
            if "fragment" not in node.params:
                problems.append(f"Q2NL: {node.id} missing structured fragment")
        if node.op_kind in ("EXTRACT", "MODEL_CALL", "NL2Q") and len(upstream) > 1:
            problems.append(f"OP: {node.id} takes at most one input")
        if node.op_kind == "MODEL_CALL" and node.source is None:
            problems.append(f"MODEL_CALL: {node.id} needs a MODEL source")
        leaf = not node.inputs
        if leaf and node.op_kind in ("SELECT", "PROJECT", "JOIN") and not node.source:
            problems.append(f"LEAF: {node.id} has neither source nor inputs")
    return problems


def infer_semantic_type(value) -> str:
    from .agents import value_matches
    for semantic_type in ("TABLE", "FORM", "EVENT", "PLAN", "RECORD", "TEXT",
                          "NUMBER", "BOOLEAN"):
        if value_matches(semantic_type, value):
            return semantic_type
    return "TEXT"


def summarize_table(payload: dict, question: str = "") -> str:
    """Deterministic table summary: counts and top values."""
    columns = payload.get("columns", [])
    rows = payload.get("rows", [])
    if not rows:
        return "No results."
    if len(rows) == 1 and len(columns) == 1:
        value = rows[0][0]
        label = question.strip().rstrip("?") or str(columns[0])
        if isinstance(value, (int, float)):
            return f"There are {value} {_count_label(label)}."
        return f"Result: {value}."
    head = columns[0]
    top = [str(row[0]) for row in rows[:3]]
    return (f"{len(rows)} rows. Top {head}: " + ", ".join(top) + ".")


def _count_label(question: str) -> str:
    match = re.match(r"how many ([a-z]+)", question.lower())
    return f"matching {match.group(1)}" if match else "matching rows"


class GraphSource:
    """Undirected taxonomy graph loaded from a JSON locator."""

    def __init__(self, data: dict):
        self.nodes = list(data.get("nodes", ()))
        self.adjacent: dict = {}
        for a, b in data.get("edges", ()):
            self.adjacent.setdefault(a, set()).add(b)
            self.adjacent.setdefault(b, set()).add(a)

    def within_hops(self, seed: str, hops: int) -> list:
        seed = seed.lower()
        if seed not in self.adjacent and seed not in self.nodes:
            return []
        frontier = {seed}
        seen = {seed}
        for _ in range(hops):
            frontier = {n for cur in frontier
                        for n in self.adjacent.get(cur, ())} - seen
            seen |= frontier
        return sorted(seen)


class DataPlanner:
    def __init__(self, registry: DataRegistry, store: RelStore,
                 backend_resolver=None, data_dir: Optional[str] = None):
        self.registry = registry
        self.store = store
        self._backend_resolver = backend_resolver
        self.data_dir = Path(data_dir) if data_dir else None
        self._graphs: dict = {}
        self._lock = threading.Lock()

    # -- transforms -----------------------------------------------------------

    def plan_transform(self, value, target_type: str,
                       target_name: str = "") -> DataPlan:
        """Plan converting ``value`` into ``target_type``.

        TEXT->TEXT criteria extraction is rule-based (leading intent phrase
        stripped); a model call substitutes when no rule matches.
        """
        source_type = infer_semantic_type(value)
        if isinstance(target_type, str):
            target = target_type
        else:
            target = target_type.semantic_type
        if source_type == target and target != "TEXT":
            return DataPlan(id=_plan_id(["identity", target]))
        if source_type == "TEXT" and target == "TEXT":
            stripped = grammar.strip_intent_prefix(value)
            if stripped is not None:
                node = OperatorNode(id="x0", op_kind="EXTRACT",
                                    params={"rule": "intent_prefix",
                                            "from_input": True})
                return DataPlan(id=_plan_id(["extract", target_name]),
                                nodes={node.id: node}, sink=node.id)
            model = self._model_source()
            if model is None:
                raise NoFeasiblePlan("no extraction rule and no MODEL source")
            node = OperatorNode(
                id="x0", op_kind="MODEL_CALL", source=str(model.path),
                params={"prompt_template": ("Extract the " +
                                            (target_name or "requested value") +
                                            " from: {input}"),
                        "from_input": True, "parse": "text"})
            return DataPlan(id=_plan_id(["modelextract", target_name]),
                            nodes={node.id: node}, sink=node.id,
                            substitutions=["<no rule matched>"])
        if source_type == "TEXT" and target == "NUMBER":
            node = OperatorNode(id="x0", op_kind="EXTRACT",
                                params={"rule": "first_number", "from_input": True})
            return DataPlan(id=_plan_id(["number"]), nodes={node.id: node},
                            sink=node.id)
        if source_type in ("RECORD", "EVENT") and target == "NUMBER":
            key = "id" if isinstance(value, dict) and "id" in value else None
            if key is None:
                raise NoFeasiblePlan(
                    f"no numeric field to extract for {target_name or target}")
            node = OperatorNode(id="x0", op_kind="EXTRACT",
                                params={"rule": "record_field", "field": key,
                                        "from_input": True})
            return DataPlan(id=_plan_id(["field", key]), nodes={node.id: node},
                            sink=node.id)
        if target == "TEXT" and source_type in ("NUMBER", "BOOLEAN", "RECORD",
                                                "EVENT"):
            node = OperatorNode(id="x0", op_kind="EXTRACT",
                                params={"rule": "stringify", "from_input": True})
            return DataPlan(id=_plan_id(["stringify"]), nodes={node.id: node},
                            sink=node.id)
        if source_type == target:
            return DataPlan(id=_plan_id(["identity", target]))
        raise NoFeasiblePlan(f"no transform route {source_type} -> {target}")

    # -- query planning ----------------------------------------------------------

    def plan_query(self, nl_query: str) -> list:
        parsed = grammar.parse_query(nl_query)
        if parsed is None:
            raise NoFeasiblePlan(f"no grammar template matches: {nl_query!r}")
        source = self._relational_source(parsed)
        if source is None:
            raise NoFeasiblePlan("no relational source in the catalog covers "
                                 f"{parsed.table_hint!r}")
        table = source.connection.get("table", source.path.name.lower())
        grounded, failed = [], []
        for fragment in parsed.fragments:
            if self.registry.grounds(source.path, fragment.phrase):
                grounded.append(fragment)
            else:
                failed.append(fragment)
        graph = self._graph_source()
        candidates = []
        if not failed:
            sql = grammar.build_sql(parsed, table, source.schema)
            if sql is None:
                raise NoFeasiblePlan("query fragments do not map onto the "
                                     f"schema of {source.path}")
            nl2q = OperatorNode(id="q0", op_kind="NL2Q",
                                params={"question": parsed.question, "sql": sql})
            select = OperatorNode(id="s0", op_kind="SELECT",
                                  source=str(source.path),
                                  params={"query_from": "q0"}, inputs=["q0"])
            candidates.append(DataPlan(
                id=_plan_id(["direct", parsed.question, str(source.path)]),
                nodes={n.id: n for n in (nl2q, select)}, sink="s0"))
        else:
            plan = self._decomposed_plan(parsed, source, table, grounded,
                                         failed, graph)
            candidates.append(plan)
        for plan in candidates:
            plan.estimated = self.estimate(plan)
        return candidates

    def _decomposed_plan(self, parsed, source, table, grounded, failed,
                         graph) -> DataPlan:
        nodes = {}
        substitutions, expansions = [], []
        scan = OperatorNode(id="scan", op_kind="SELECT",
                            source=str(source.path), params={"predicates": []})
        nodes[scan.id] = scan
        current = scan.id
        counter = 0

        def join_with(value_node_id: str, column: str) -> None:
            nonlocal current, counter
            join = OperatorNode(id=f"j{counter}", op_kind="JOIN",
                                inputs=[current, value_node_id],
                                params={"left_on": column, "right_on": column,
                                        "kind": "semi", "ci": True})
            nodes[join.id] = join
            current = join.id
            counter += 1

        for fragment in failed:
            column = grammar.role_column(fragment.role, source.schema)
            if column is None:
                raise NoFeasiblePlan(
                    f"fragment {fragment.phrase!r} has no column on {source.path}")
            if fragment.role == "title" and graph is not None:
                expand = OperatorNode(
                    id=f"g{counter}", op_kind="SELECT", source=str(graph.path),
                    params={"mode": "expand", "seed": fragment.phrase.lower(),
                            "hops": 2, "column": column})
                nodes[expand.id] = expand
                join_with(expand.id, column)
                substitutions.append(fragment.phrase)
                continue
            model = self._model_source()
            if model is None:
                raise NoFeasiblePlan(
                    f"phrase {fragment.phrase!r} fails grounding and no MODEL "
                    "source is registered")
            q2nl = OperatorNode(
                id=f"n{counter}", op_kind="Q2NL",
                params={"fragment": {"role": fragment.role,
                                     "phrase": fragment.phrase},
                        "template": _q2nl_template(fragment.role)})
            call = OperatorNode(
                id=f"m{counter}", op_kind="MODEL_CALL", source=str(model.path),
                inputs=[q2nl.id],
                params={"prompt_template": "{input} Respond with a "
                                           "comma-separated list only.",
                        "parse": "list", "column": column})
            nodes[q2nl.id] = q2nl
            nodes[call.id] = call
            join_with(call.id, column)
            substitutions.append(fragment.phrase)
        for fragment in grounded:
            column = grammar.role_column(fragment.role, source.schema)
            if fragment.role == "title" and graph is not None and column:
                expand = OperatorNode(
                    id=f"g{counter}", op_kind="SELECT", source=str(graph.path),
                    params={"mode": "expand", "seed": fragment.phrase.lower(),
                            "hops": 2, "column": column})
                nodes[expand.id] = expand
                join_with(expand.id, column)
                expansions.append(fragment.phrase)
            elif column:
                scan.params["predicates"].append(
                    {"col": column, "op": "like" if fragment.role == "skill"
                     else "eq", "value": fragment.phrase.lower()})
        return DataPlan(
            id=_plan_id(["decomposed", parsed.question, str(source.path)]),
            nodes=nodes, sink=current, substitutions=substitutions,
            expansions=expansions)

    def choose_query_plan(self, nl_query: str, constraints=None):
        """Generate candidates and pick the best feasible one under the
        (per-session configurable) constraint set. Returns (plan, qos)."""
        from .optimizer import ConstraintSet, choose

        if constraints is None or isinstance(constraints, dict):
            constraints = ConstraintSet.from_config(constraints)
        candidates = self.plan_query(nl_query)
        _plan_id, qos, plan = choose(
            [(plan.id, plan.estimated, plan) for plan in candidates],
            constraints)
        return plan, qos

    # -- execution -------------------------------------------------------------

    def execute(self, plan: DataPlan, budget=None, input_value=None):
        """Evaluate operators in topological order; returns (value, type)."""
        if plan.identity:
            return input_value, infer_semantic_type(input_value)
        problems = validate_plan(plan)
        if problems:
            raise OperatorFailed(plan.sink or "?", "; ".join(problems))
        order = self._topo_order(plan)
        values: dict = {}
        for node_id in order:
            node = plan.nodes[node_id]
            try:
                values[node_id] = self._eval(node, values, budget, input_value)
            except (SourceUnavailable, OperatorFailed):
                raise
            except Exception as exc:  # noqa: BLE001
                raise OperatorFailed(node_id, str(exc)) from exc
        value = values[plan.sink]
        return value, infer_semantic_type(value)

    def _topo_order(self, plan: DataPlan) -> list:
        pending = {nid: len(node.inputs) for nid, node in plan.nodes.items()}
        ready = sorted(nid for nid, n in pending.items() if n == 0)
        order = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            for node in plan.nodes.values():
                if nid in node.inputs:
                    pending[node.id] -= 1
                    if pending[node.id] == 0:
                        ready.append(node.id)
            ready.sort()
        return order

    def _eval(self, node: OperatorNode, values: dict, budget, input_value):
        kind = node.op_kind
        if kind == "SELECT":
            return self._eval_select(node, values, budget)
        if kind == "PROJECT":
            payload = values[node.inputs[0]]
            columns = node.params["columns"]
            rows = [[row[payload["columns"].index(c)] for c in columns]
                    for row in payload["rows"]]
            return {"columns": columns, "rows": rows}
        if kind == "JOIN":
            return self._eval_join(node, values)
        if kind == "EXTRACT":
            return self._eval_extract(node, values, input_value)
        if kind == "SUMMARIZE":
            payload = values[node.inputs[0]] if node.inputs else input_value
            return summarize_table(payload, node.params.get("question", ""))
        if kind == "Q2NL":
            fragment = node.params["fragment"]
            return node.params["template"].format(phrase=fragment["phrase"])
        if kind == "NL2Q":
            return node.params["sql"]
        if kind == "MODEL_CALL":
            return self._eval_model_call(node, values, budget, input_value)
        if kind == "DISCOVER":
            hits = self.registry.discover(node.params.get("query", ""),
                                          node.params.get("modality"),
                                          k=int(node.params.get("k", 5)))
            return {"columns": ["path", "score"],
                    "rows": [[str(r.path), score] for r, score in hits]}
        raise OperatorFailed(node.id, f"unknown operator {kind}")

    def _eval_select(self, node: OperatorNode, values: dict, budget):
        record = self.registry.get(node.source)
        if record.modality == "GRAPH":
            graph = self._load_graph(record)
            titles = graph.within_hops(node.params["seed"],
                                       int(node.params.get("hops", 2)))
            column = node.params.get("column", "value")
            self._charge(budget, record.cost_hints.per_call_cost,
                         record.cost_hints.latency_ms)
            return {"columns": [column], "rows": [[t] for t in titles]}
        if record.modality != "RELATIONAL":
            raise OperatorFailed(node.id,
                                 f"SELECT over {record.modality} source")
        query_from = node.params.get("query_from")
        if query_from:
            sql = values[query_from]
            table = self.store.query(sql)
            self._charge(budget, record.cost_hints.per_call_cost
                         * max(1.0, float(len(table.rows))), 1.0)
            return table.to_payload()
        table_name = record.connection.get("table", record.path.name.lower())
        table = self.store.table(table_name)
        rows = table.rows
        for predicate in node.params.get("predicates", ()):
            rows = [r for r in rows if _matches(r, predicate)]
        self._charge(budget, record.cost_hints.per_call_cost
                     * max(1.0, float(len(rows))), 1.0)
        return TableData(table.name, table.columns, rows).to_payload()

    def _eval_join(self, node: OperatorNode, values: dict):
        left = values[node.inputs[0]]
        right = values[node.inputs[1]]
        left_on = node.params["left_on"]
        right_on = node.params["right_on"]
        ci = bool(node.params.get("ci", True))

        def norm(v):
            return v.strip().lower() if ci and isinstance(v, str) else v

        right_idx = right["columns"].index(right_on)
        keys = {norm(row[right_idx]) for row in right["rows"]}
        left_idx = left["columns"].index(left_on)
        rows = [row for row in left["rows"] if norm(row[left_idx]) in keys]
        return {"columns": left["columns"], "rows": rows}

    def _eval_extract(self, node: OperatorNode, values: dict, input_value):
        source = (values[node.inputs[0]] if node.inputs
                  else input_value if node.params.get("from_input")
                  else node.params.get("value"))
        rule = node.params.get("rule", "intent_prefix")
        if rule == "intent_prefix":
            stripped = grammar.strip_intent_prefix(source)
            return stripped if stripped is not None else source
        if rule == "first_number":
            match = re.search(r"-?\d+(\.\d+)?", str(source))
            if not match:
                raise OperatorFailed(node.id, f"no number in {source!r}")
            text = match.group(0)
            return float(text) if "." in text else int(text)
        if rule == "record_field":
            return source[node.params["field"]]
        if rule == "stringify":
            if isinstance(source, str):
                return source
            return json.dumps(source, ensure_ascii=False, sort_keys=True)
        raise OperatorFailed(node.id, f"unknown extract rule {rule}")

    def _eval_model_call(self, node: OperatorNode, values: dict, budget,
                         input_value):
        record = self.registry.get(node.source)
        if record.modality != "MODEL":
            raise OperatorFailed(node.id, "MODEL_CALL requires a MODEL source")
        backend = self._resolve_backend(record)
        text = (values[node.inputs[0]] if node.inputs
                else input_value if node.params.get("from_input") else "")
        prompt = node.params.get("prompt_template", "{input}").replace(
            "{input}", str(text))
        completion = backend.complete(prompt, node.params.get("config"))
        self._charge(budget,
                     completion.cost + record.cost_hints.per_call_cost,
                     completion.latency_ms)
        if node.params.get("parse") == "list":
            parts = [p.strip() for chunk in completion.text.split("\n")
                     for p in chunk.split(",")]
            column = node.params.get("column", "value")
            return {"columns": [column],
                    "rows": [[p] for p in parts if p]}
        return completion.text

    # -- estimation ---------------------------------------------------------------

    def estimate(self, plan: DataPlan) -> QoSVector:
        if plan.identity:
            return QoSVector(0.0, 0.0, 1.0)
        return estimate_dag(sorted(plan.nodes), plan.edges(),
                            lambda nid: self._node_cost(plan.nodes[nid]))

    def _node_cost(self, node: OperatorNode) -> NodeCost:
        if node.source:
            try:
                record = self.registry.get(node.source)
            except UnknownPath:
                return None
            hints = record.cost_hints
            if node.op_kind == "MODEL_CALL":
                return NodeCost(hints.per_call_cost, hints.latency_ms,
                                hints.quality)
            if record.modality == "RELATIONAL":
                rows = self._estimate_rows(record, node)
                return NodeCost(hints.per_call_cost * max(1.0, rows),
                                max(1.0, hints.latency_ms), hints.quality)
            return NodeCost(hints.per_call_cost, hints.latency_ms,
                            hints.quality)
        return NodeCost(0.1, 1.0, 1.0)

    def _estimate_rows(self, record: DataSourceRecord,
                       node: OperatorNode) -> float:
        """Distinct-value uniformity over the sampled index."""
        predicates = node.params.get("predicates", ())
        total = None
        for column in record.schema:
            stats = self.registry.column_stats(record.path, column)
            if stats is not None:
                total = stats.total
                break
        if total is None:
            return 1.0
        rows = float(total)
        for predicate in predicates:
            stats = self.registry.column_stats(record.path, predicate["col"])
            if stats is None or stats.distinct_count == 0:
                continue
            rows = rows / stats.distinct_count
        return max(1.0, rows)

    # -- source helpers ----------------------------------------------------------

    def _relational_source(self, parsed) -> Optional[DataSourceRecord]:
        hits = self.registry.discover(
            f"{parsed.table_hint} {parsed.question}", "RELATIONAL", k=3)
        for record, score in hits:
            if score <= 0:
                continue
            if record.connection.get("table") or record.schema:
                return record
        return None

    def _model_source(self) -> Optional[DataSourceRecord]:
        hits = self.registry.discover("general knowledge model", "MODEL", k=1)
        if hits:
            return hits[0][0]
        records = [r for r in self.registry.records() if r.modality == "MODEL"]
        return records[0] if records else None

    def _graph_source(self) -> Optional[DataSourceRecord]:
        records = [r for r in self.registry.records()
                   if r.modality == "GRAPH"]
        for record in records:
            text = (record.description + " " +
                    str(record.schema.get("edges", ""))).lower()
            if "title" in text or "taxonomy" in text:
                return record
        return records[0] if records else None

    def _load_graph(self, record: DataSourceRecord) -> GraphSource:
        key = str(record.path)
        with self._lock:
            graph = self._graphs.get(key)
        if graph is not None:
            return graph
        locator = record.connection.get("locator")
        if not locator:
            raise SourceUnavailable(f"graph source {key} has no locator")
        path = Path(locator)
        if not path.is_absolute() and self.data_dir is not None:
            path = self.data_dir / path
        if not path.exists():
            raise SourceUnavailable(f"graph data missing: {path}")
        graph = GraphSource(json.loads(path.read_text(encoding="utf-8")))
        with self._lock:
            self._graphs[key] = graph
        return graph

    def _resolve_backend(self, record: DataSourceRecord) -> ModelBackend:
        if self._backend_resolver is not None:
            backend = self._backend_resolver(record)
            if backend is None:
                raise SourceUnavailable(
                    f"no backend configured for {record.path}")
            return backend
        raise SourceUnavailable("no model backend resolver configured")

    @staticmethod
    def _charge(budget, cost: float, latency_ms: float) -> None:
        if budget is not None:
            budget.charge(cost=cost, latency_ms=latency_ms)


def _matches(row: dict, predicate: dict) -> bool:
    value = row.get(predicate["col"])
    op = predicate.get("op", "eq")
    target = predicate.get("value")
    if op == "eq":
        if isinstance(value, str) and isinstance(target, str):
            return value.strip().lower() == target.strip().lower()
        return value == target
    if op == "like":
        return str(target).lower() in str(value).lower()
    if op == "in":
        options = {str(v).strip().lower() for v in predicate.get("values", ())}
        return str(value).strip().lower() in options
    raise ValueError(f"unknown predicate op {op}")


def _q2nl_template(role: str) -> str:
    if role == "location":
        return "List the cities in the {phrase}."
    if role == "title":
        return "List job titles equivalent to {phrase}."
    return "List the values matching {phrase}."
