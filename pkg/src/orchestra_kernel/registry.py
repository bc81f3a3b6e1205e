"""Agent registry: metadata store with keyword/vector search and derivation."""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .agents import AgentDescriptor
from .errors import DuplicateName, UnknownAgent
from .vectors import cosine, lexical_vector, tokenize


def descriptor_text(descriptor: AgentDescriptor) -> str:
    parts = [descriptor.name, descriptor.description]
    for spec in list(descriptor.inputs) + list(descriptor.outputs):
        parts.append(spec.description)
    return " ".join(p for p in parts if p)


@dataclass
class AgentRecord:
    descriptor: AgentDescriptor
    vector: dict = field(default_factory=dict)
    invocations: int = 0
    failures: int = 0
    derived_from: Optional[str] = None
    created: float = 0.0
    updated: float = 0.0

    @property
    def name(self) -> str:
        return self.descriptor.name

    def to_dict(self) -> dict:
        return {"descriptor": self.descriptor.to_dict(),
                "invocations": self.invocations, "failures": self.failures,
                "derived_from": self.derived_from,
                "created": self.created, "updated": self.updated}


class AgentRegistry:
    """Name-keyed agent metadata; reads are lock-free snapshots, writes are
    serialized and (optionally) persisted to a single versioned file."""

    def __init__(self, path: Optional[str] = None, embedder=lexical_vector):
        self._records: dict[str, AgentRecord] = {}
        self._lock = threading.Lock()
        self._path = Path(path) if path else None
        self._version = 0
        self._embedder = embedder

    def register(self, descriptor: AgentDescriptor) -> AgentRecord:
        descriptor.validate()
        key = descriptor.name.lower()
        now = time.time()
        record = AgentRecord(descriptor=descriptor,
                             vector=self._embedder(descriptor_text(descriptor)),
                             created=now, updated=now)
        with self._lock:
            if key in self._records:
                raise DuplicateName(f"agent {descriptor.name!r} already registered")
            self._records[key] = record
            self._persist_locked()
        return record

    def get(self, name: str) -> AgentRecord:
        with self._lock:
            record = self._records.get(name.lower())
        if record is None:
            raise UnknownAgent(f"unknown agent: {name}")
        return record

    def names(self) -> list:
        with self._lock:
            return sorted(r.name for r in self._records.values())

    def records(self) -> list:
        with self._lock:
            return sorted(self._records.values(), key=lambda r: r.name)

    def search_keyword(self, query: str, k: int = 5) -> list:
        """Full-containment matches first, then by contained-token count;
        ties broken by name."""
        tokens = tokenize(query)
        if not tokens:
            return []
        scored = []
        for record in self.records():
            doc = set(tokenize(record.name + " " + record.descriptor.description))
            contained = sum(1 for t in tokens if t in doc)
            if contained == 0:
                continue
            scored.append((record, contained == len(tokens), contained))
        scored.sort(key=lambda row: (-int(row[1]), -row[2], row[0].name))
        return [record for record, _, _ in scored[:k]]

    def search_vector(self, query: str, k: int = 5) -> list:
        """Descending cosine over lexical vectors; returns (record, score)."""
        qvec = self._embedder(query)
        scored = [(record, cosine(qvec, record.vector))
                  for record in self.records()]
        scored.sort(key=lambda pair: (-pair[1], pair[0].name))
        return scored[:k]

    def derive(self, base_name: str, overrides: dict) -> AgentRecord:
        """New agent from an existing one; the base record is untouched."""
        base = self.get(base_name)
        data = base.descriptor.to_dict()
        new_name = overrides.get("name")
        if not new_name:
            raise DuplicateName("derived agent needs a distinct name")
        data.update({k: v for k, v in overrides.items() if k != "defaults"})
        for param_name, default in (overrides.get("defaults") or {}).items():
            for spec in data["inputs"]:
                if spec["name"] == param_name:
                    spec["default"] = default
                    spec["required"] = False
        derived = AgentDescriptor.from_dict(data)
        record = self.register(derived)
        record.derived_from = base.name
        return record

    def record_usage(self, name: str, failed: bool = False) -> None:
        try:
            record = self.get(name)
        except UnknownAgent:
            return
        with self._lock:
            record.invocations += 1
            if failed:
                record.failures += 1
            record.updated = time.time()

    def _persist_locked(self) -> None:
        if self._path is None:
            return
        self._version += 1
        payload = {"version": self._version,
                   "agents": [r.to_dict() for r in
                              sorted(self._records.values(), key=lambda r: r.name)]}
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._path.write_text(json.dumps(payload, ensure_ascii=False, indent=2),
                              encoding="utf-8")

    def load_file(self, path) -> int:
        """Bulk-register descriptors from a seed file (YAML or JSON list)."""
        from .seedio import read_structured
        items = read_structured(path)
        if isinstance(items, dict):
            items = items.get("agents", [])
        count = 0
        for item in items:
            self.register(AgentDescriptor.from_dict(item))
            count += 1
        return count
