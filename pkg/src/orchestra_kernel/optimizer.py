"""QoS estimation and multi-objective plan selection.

Cost sums over nodes, latency follows the critical path (parallel
branches overlap), quality is the pessimistic minimum. Selection
discards infeasible candidates, then minimizes a weighted scalarization
with min-max-normalized cost and latency over the feasible set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import AllInfeasible, MissingCostHints


@dataclass(frozen=True)
class QoSVector:
    cost: float = 0.0
    latency_ms: float = 0.0
    quality: float = 1.0

    def to_dict(self) -> dict:
        return {"cost": self.cost, "latency_ms": self.latency_ms,
                "quality": self.quality}


@dataclass
class ConstraintSet:
    max_cost: Optional[float] = None
    max_latency_ms: Optional[float] = None
    min_quality: Optional[float] = None
    weights: tuple = (1 / 3, 1 / 3, 1 / 3)  # (cost, latency, quality)
    mode: str = "weighted"                   # weighted | lexicographic

    def __post_init__(self):
        w_cost, w_latency, w_quality = self.weights
        if min(self.weights) < 0:
            raise ValueError("weights must be nonnegative")
        total = w_cost + w_latency + w_quality
        if abs(total - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        if (self.max_cost is None and self.max_latency_ms is None
                and self.min_quality is None and total == 0):
            raise ValueError("at least one constraint or weight must be active")

    @staticmethod
    def from_config(data: Optional[dict]) -> "ConstraintSet":
        data = data or {}
        weights = data.get("weights")
        return ConstraintSet(
            max_cost=data.get("max_cost"),
            max_latency_ms=data.get("max_latency_ms"),
            min_quality=data.get("min_quality"),
            weights=tuple(weights) if weights else (1 / 3, 1 / 3, 1 / 3),
            mode=data.get("mode", "weighted"))

    def to_dict(self) -> dict:
        return {"max_cost": self.max_cost,
                "max_latency_ms": self.max_latency_ms,
                "min_quality": self.min_quality,
                "weights": list(self.weights), "mode": self.mode}

    def violations(self, qos: QoSVector) -> list:
        found = []
        if self.max_cost is not None and qos.cost > self.max_cost:
            found.append("cost")
        if self.max_latency_ms is not None and qos.latency_ms > self.max_latency_ms:
            found.append("latency")
        if self.min_quality is not None and qos.quality < self.min_quality:
            found.append("quality")
        return found


@dataclass(frozen=True)
class NodeCost:
    """Per-node QoS contribution resolved by the caller-supplied lookup."""
    cost: float
    latency_ms: float
    quality: float = 1.0


def estimate_dag(node_ids: list, edges: list, cost_of) -> QoSVector:
    """QoS of a DAG given ``cost_of(node_id) -> NodeCost``.

    ``edges`` are (from_id, to_id) pairs; latency is the longest path.
    """
    costs = {}
    for node_id in node_ids:
        node_cost = cost_of(node_id)
        if node_cost is None:
            raise MissingCostHints(node_id)
        costs[node_id] = node_cost
    incoming: dict = {n: [] for n in node_ids}
    outgoing: dict = {n: [] for n in node_ids}
    for src, dst in edges:
        outgoing[src].append(dst)
        incoming[dst].append(src)
    # longest-path DP over a topological order
    order = []
    pending = {n: len(incoming[n]) for n in node_ids}
    ready = sorted(n for n, d in pending.items() if d == 0)
    while ready:
        node = ready.pop(0)
        order.append(node)
        for nxt in sorted(outgoing[node]):
            pending[nxt] -= 1
            if pending[nxt] == 0:
                ready.append(nxt)
        ready.sort()
    if len(order) != len(node_ids):
        raise ValueError("plan graph contains a cycle")
    finish: dict = {}
    for node in order:
        start = max((finish[p] for p in incoming[node]), default=0.0)
        finish[node] = start + costs[node].latency_ms
    total_cost = sum(c.cost for c in costs.values())
    latency = max(finish.values(), default=0.0)
    quality = min((c.quality for c in costs.values()), default=1.0)
    return QoSVector(cost=total_cost, latency_ms=latency, quality=quality)


def _normalize(values: list) -> list:
    lo, hi = min(values), max(values)
    if hi - lo <= 0:
        return [0.0 for _ in values]
    return [(v - lo) / (hi - lo) for v in values]


def choose(candidates: list, constraints: ConstraintSet):
    """Pick the best feasible (plan_id, qos) pair.

    ``candidates`` is a list of (plan_id, QoSVector, payload); returns the
    winning (plan_id, qos, payload). Raises AllInfeasible with the
    violation report when nothing survives the constraints.
    """
    if not candidates:
        raise ValueError("candidates must be nonempty")
    feasible = []
    violations = {}
    for plan_id, qos, payload in candidates:
        bad = constraints.violations(qos)
        if bad:
            violations[plan_id] = bad
        else:
            feasible.append((plan_id, qos, payload))
    if not feasible:
        raise AllInfeasible(violations)
    if constraints.mode == "lexicographic":
        feasible.sort(key=lambda row: (row[1].cost, row[1].latency_ms,
                                       -row[1].quality, row[0]))
        return feasible[0]
    w_cost, w_latency, w_quality = constraints.weights
    norm_cost = _normalize([qos.cost for _, qos, _ in feasible])
    norm_latency = _normalize([qos.latency_ms for _, qos, _ in feasible])
    scored = []
    for idx, (plan_id, qos, payload) in enumerate(feasible):
        score = (w_cost * norm_cost[idx] + w_latency * norm_latency[idx]
                 - w_quality * qos.quality)
        scored.append((score, plan_id, qos, payload))
    scored.sort(key=lambda row: (row[0], row[1]))
    _, plan_id, qos, payload = scored[0]
    return plan_id, qos, payload
